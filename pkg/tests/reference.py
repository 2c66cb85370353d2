"""Frozen expected values for the four-treatment duodenal ulcer dataset.

The dataset cross-classifies 417 patients by operation severity (4 ordered
treatments) and extent of side effects (none / slight / moderate).  The
values below are the published analysis results for this dataset and the
exact rational matrix entries implied by its margins; statistics are quoted
to the precision they were reported at.
"""

from fractions import Fraction

ULCER_COUNTS = [
    [61, 28, 7],
    [68, 23, 13],
    [58, 40, 12],
    [53, 38, 16],
]

# saturated relative frequencies, 4 decimals
P_BAR = [0.1463, 0.0671, 0.0168, 0.1631, 0.0552, 0.0312,
         0.1391, 0.0959, 0.0288, 0.1271, 0.0911, 0.0384]

# order-restricted fit, 4 decimals
P_TILDE = [0.1509, 0.0625, 0.0168, 0.1585, 0.0657, 0.0253,
           0.1391, 0.0900, 0.0347, 0.1271, 0.0911, 0.0384]

# homogeneity fit, 4 decimals
P_HAT = [0.1325, 0.0712, 0.0265, 0.1435, 0.0772, 0.0287,
         0.1518, 0.0816, 0.0304, 0.1477, 0.0794, 0.0295]

THETA_TILDE_2 = [1.1977, 0.8650]
THETA_TILDE_12 = [0.9983, 0.4501, 0.6376, 0.0894, 0.1916, 0.0894]

# statistic grid: lambda -> value, and the matching asymptotic p-values
LAMBDA_LABELS = ["-1.5", "-1", "-0.5", "0", "2/3", "1", "1.5", "2"]
LAMBDA_VALUES = [-1.5, -1.0, -0.5, 0.0, Fraction(2, 3), 1.0, 1.5, 2.0]

T_STATS = [9.4681, 9.1918, 8.9535, 8.7497, 8.5262, 8.4334, 8.3160, 8.2230]
T_PVALUES = [0.0123, 0.0139, 0.0155, 0.0170, 0.0188, 0.0196, 0.0206, 0.0215]
S_STATS = [9.1282, 8.9774, 8.8520, 8.7497, 8.6463, 8.6076, 8.5650, 8.5399]
S_PVALUES = [0.0143, 0.0153, 0.0162, 0.0170, 0.0178, 0.0181, 0.0184, 0.0186]

# chi-bar mixing weights at the homogeneity fit (numerical-integration run)
WEIGHTS = [0.0006103103, 0.009753533, 0.06122672, 0.1953851,
           0.3353725, 0.2949007, 0.1028136]

QUANTILE_05 = 6.34

# exact rational entries of the tridiagonal K matrices and their Kronecker
# products for this dataset's margins
K_NU = [
    [Fraction(3475, 416), Fraction(-417, 104), 0],
    [Fraction(-417, 104), Fraction(44619, 5720), Fraction(-417, 110)],
    [0, Fraction(-417, 110), Fraction(90489, 11770)],
]
K_PI = [
    [Fraction(17097, 3440), Fraction(-417, 129)],
    [Fraction(-417, 129), Fraction(8201, 688)],
]
K_NU_INV_ROW0 = [Fraction(3424, 19321), Fraction(6944, 57963), Fraction(3424, 57963)]
K_PI_INV = [
    [Fraction(4720, 19321), Fraction(1280, 19321)],
    [Fraction(1280, 19321), Fraction(1968, 19321)],
]
H_11 = Fraction(11882415, 286208)
H_INV_11 = Fraction(16161280, 373301041)

# theoretical local odds ratios of the shift-indexed truth model, 3 decimals,
# rows (i, j) lexicographic over {1,2,3} x {1,2}
LOCAL_ODDS_BY_DELTA = {
    0.0: [1.000, 1.000, 1.000, 1.000, 1.000, 1.000],
    0.1: [1.091, 1.069, 1.083, 1.055, 1.077, 1.045],
    0.5: [1.333, 1.125, 1.250, 1.066, 1.200, 1.042],
    1.0: [1.500, 1.111, 1.333, 1.050, 1.250, 1.029],
    1.5: [1.600, 1.094, 1.375, 1.039, 1.273, 1.021],
}

# exact sizes at nominal 0.05 for the n = 84 scenario (row totals
# 12, 18, 24, 30), 10^4 replications
ALPHA_SCEN3 = {("T", "2/3"): 0.0477, ("T", "1"): 0.0474,
               ("S", "2/3"): 0.0485, ("S", "1"): 0.0479}
