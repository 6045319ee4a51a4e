"""Published full-scale reference results for the six benchmark experiments.

Each entry lists, per regressor row: the 95% confidence interval for the upper
bound U, the 95% confidence interval for the minimal mean squared distance D,
the relative error in percent, the 95% confidence upper bound of the relative
error in percent, and the fit time in seconds. The full-scale runs used
M = 2e6 training samples and N = 6e8 certification samples for tables 1-3 and
M = 5e5, N = 6e7 with d = 100 assets for tables 4-6.
"""

from __future__ import annotations

TABLE_SCALES = {
    1: {"m": 2_000_000, "n": 600_000_000, "d": None},
    2: {"m": 2_000_000, "n": 600_000_000, "d": None},
    3: {"m": 2_000_000, "n": 600_000_000, "d": None},
    4: {"m": 500_000, "n": 60_000_000, "d": 100},
    5: {"m": 500_000, "n": 60_000_000, "d": 100},
    6: {"m": 500_000, "n": 60_000_000, "d": 100},
}

# label -> (ci_u, ci_d, rel_err_pct, rel_err_upper_pct, fit_seconds)
REFERENCE_ROWS = {
    1: [
        ("lin. regr.", (3.99957, 4.00105), (0.99982, 1.00040), 77.46, 77.47, 0.1),
        ("poly. regr.", (0.99979, 1.00002), (0.99982, 1.00040), 0.25, 0.68, 0.1),
        ("NN tanh", (0.99986, 1.00009), (0.99982, 1.00040), 0.45, 0.77, 1332.0),
        ("NN ReLU", (1.00007, 1.00030), (0.99982, 1.00040), 0.79, 1.01, 1328.3),
        ("NN LSE", (0.99988, 1.00010), (0.99982, 1.00040), 0.47, 0.79, 1483.2),
    ],
    2: [
        ("lin. regr.", (41.57390, 41.58212), (36.16566, 36.17592), 100.00, 100.02, 0.1),
        ("lin. regr., add. feature", (37.89192, 37.90030), (36.16566, 36.17592), 56.48, 56.52, 0.1),
        ("poly. regr.", (36.66939, 36.67730), (36.16566, 36.17592), 30.47, 30.55, 0.2),
        ("poly. regr., add. feature", (36.39638, 36.40441), (36.16566, 36.17592), 20.58, 20.70, 0.2),
        ("NN tanh", (36.16812, 36.17617), (36.16566, 36.17592), 0.90, 2.44, 1410.3),
        ("NN tanh, add. feature", (36.16801, 36.17606), (36.16566, 36.17592), 0.75, 2.38, 1440.5),
        ("NN ReLU", (36.16800, 36.17605), (36.16566, 36.17592), 0.74, 2.38, 1399.0),
        ("NN ReLU, add. feature", (36.16775, 36.17579), (36.16566, 36.17592), 0.15, 2.27, 1470.0),
        ("NN LSE", (36.16757, 36.17562), (36.16566, 36.17592), -0.49, 2.21, 1579.7),
        ("NN LSE, add. feature", (36.16764, 36.17569), (36.16566, 36.17592), -0.36, 2.24, 1532.1),
    ],
    3: [
        ("lin. regr.", (39.93194, 39.94025), (39.84392, 39.85452), 8.75, 8.89, 0.1),
        ("lin. regr., add. feature", (39.92223, 39.93055), (39.84392, 39.85452), 8.24, 8.39, 0.1),
        ("poly. regr.", (39.85144, 39.85974), (39.84392, 39.85452), 2.01, 2.56, 0.2),
        ("poly. regr., add. feature", (39.85101, 39.85930), (39.84392, 39.85452), 1.92, 2.48, 0.2),
        ("NN tanh", (39.84711, 39.85541), (39.84392, 39.85452), 0.33, 1.62, 1373.0),
        ("NN tanh, add. feature", (39.84716, 39.85546), (39.84392, 39.85452), 0.40, 1.63, 1449.0),
        ("NN ReLU", (39.84717, 39.85547), (39.84392, 39.85452), 0.41, 1.63, 1390.0),
        ("NN ReLU, add. feature", (39.84724, 39.85554), (39.84392, 39.85452), 0.48, 1.65, 1411.0),
        ("NN LSE", (39.84710, 39.85541), (39.84392, 39.85452), 0.32, 1.62, 1515.0),
        ("NN LSE, add. feature", (39.84717, 39.85547), (39.84392, 39.85452), 0.40, 1.63, 1561.0),
    ],
    4: [
        ("lin. regr.", (6.39829, 6.40817), (6.39167, 6.40396), 4.52, 5.06, 1.6),
        ("lin. regr., add. feature", (6.39771, 6.40759), (6.39167, 6.40396), 4.27, 4.84, 1.7),
        ("poly. regr.", (6.39556, 6.40542), (6.39167, 6.40396), 3.22, 3.94, 83.3),
        ("poly. regr., add. feature", (6.39543, 6.40534), (6.39167, 6.40396), 3.14, 3.88, 89.86),
        ("NN tanh", (6.39249, 6.40237), (6.39167, 6.40396), -1.01, 2.04, 1636.3),
        ("NN tanh, add. feature", (6.39255, 6.40242), (6.39167, 6.40396), -0.91, 2.09, 1647.5),
        ("NN ReLU", (6.39288, 6.40276), (6.39167, 6.40396), 0.60, 2.36, 1620.1),
        ("NN ReLU, add. feature", (6.39249, 6.40237), (6.39167, 6.40396), -1.03, 2.04, 1650.5),
        ("NN LSE", (6.39276, 6.40263), (6.39167, 6.40396), -0.30, 2.26, 1807.3),
        ("NN LSE, add. feature", (6.39260, 6.40247), (6.39167, 6.40396), -0.83, 2.13, 1830.9),
    ],
    5: [
        ("lin. regr.", (24.36374, 24.36761), (24.33863, 24.36034), 2.52, 2.90, 4.8),
        ("lin. regr., add. feature", (24.36276, 24.36666), (24.33863, 24.36034), 2.45, 2.84, 4.8),
        ("poly. regr.", (24.35346, 24.35739), (24.33863, 24.36034), 1.56, 2.12, 88.7),
        ("poly. regr., add. feature", (24.35187, 24.35583), (24.33863, 24.36034), 1.37, 1.98, 93.3),
        ("NN tanh", (24.34708, 24.35103), (24.33863, 24.36034), -0.12, 1.43, 1622.1),
        ("NN tanh, add. feature", (24.34615, 24.35011), (24.33863, 24.36034), -0.58, 1.31, 1642.5),
        ("NN ReLU", (24.34672, 24.35067), (24.33863, 24.36034), -0.38, 1.38, 1620.2),
        ("NN ReLU, add. feature", (24.34605, 24.35001), (24.33863, 24.36034), -0.61, 1.29, 1634.3),
        ("NN LSE", (24.34774, 24.35169), (24.33863, 24.36034), 0.48, 1.51, 1837.4),
        ("NN LSE, add. feature", (24.34626, 24.35022), (24.33863, 24.36034), -0.55, 1.32, 1832.5),
    ],
    6: [
        ("lin. regr.", (21.19898, 21.20766), (21.1726, 21.19328), 2.14, 2.36, 4.9),
        ("lin. regr., add. feature", (21.19584, 21.20468), (21.1726, 21.19328), 1.98, 2.21, 5.2),
        ("poly. regr.", (21.19190, 21.20076), (21.1726, 21.19328), 1.76, 2.02, 89.1),
        ("poly. regr., add. feature", (21.18934, 21.19820), (21.1726, 21.19328), 1.60, 1.88, 91.5),
        ("NN tanh", (21.18205, 21.19086), (21.1726, 21.19328), 0.99, 1.40, 1622.1),
        ("NN tanh, add. feature", (21.18185, 21.19064), (21.1726, 21.19328), 0.97, 1.38, 1642.5),
        ("NN ReLU", (21.18194, 21.19075), (21.1726, 21.19328), 0.98, 1.39, 1620.2),
        ("NN ReLU, add. feature", (21.18186, 21.19065), (21.1726, 21.19328), 0.97, 1.39, 1634.3),
        ("NN LSE", (21.18296, 21.19177), (21.1726, 21.19328), 1.09, 1.47, 1825.2),
        ("NN LSE, add. feature", (21.18185, 21.19065), (21.1726, 21.19328), 0.97, 1.38, 1837.4),
    ],
}
