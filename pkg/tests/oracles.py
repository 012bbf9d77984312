"""Hand-arithmetic oracles for the closed-form formulas, computed once with exact
rationals and frozen here."""

from fractions import Fraction

FILL_CASES = [
    ((0, 4, 0, 16, 4), Fraction(1, 1)),
    ((4, 4, 16, 16, 4), Fraction(0, 1)),
    ((2, 4, 8, 16, 4), Fraction(1, 2)),
    ((98, 1024, 1, 12, 4), Fraction(3715, 4108)),
    ((2503055453, 3221225472, 0, 0, 3), Fraction(718170019, 3221225472)),
    ((0, 4, 13254042458, 17179869184, 2), Fraction(1962913367, 8589934596)),
    ((190238, 1048576, 0, 0, 2), Fraction(429169, 524288)),
    ((2428605135, 3221225472, 1014, 4096, 1), Fraction(792623419, 3221229568)),
    ((6, 8, 949539216, 17179869184, 1), Fraction(2705054995, 2863311532)),
    ((1800188482, 3221225472, 2, 12, 3), Fraction(1065777745, 2415919107)),
    ((1324919352, 3221225472, 0, 0, 7), Fraction(79012755, 134217728)),
    ((2497953681, 3221225472, 9, 12, 1), Fraction(120545299, 536870914)),
    ((8, 8, 2, 16, 1), Fraction(7, 12)),
    ((884585951, 3221225472, 0, 0, 7), Fraction(2336639521, 3221225472)),
    ((658814, 1048576, 16851052423, 17179869184, 4), Fraction(330375809, 17184063488)),
    ((368, 1024, 7, 16, 2), Fraction(1321, 2064)),
    ((4, 4, 10517662778, 17179869184, 3), Fraction(3331103203, 8589934598)),
    ((2198734780, 3221225472, 0, 0, 1), Fraction(255622673, 805306368)),
    ((318734, 1048576, 7, 12, 3), Fraction(2189531, 3145740)),
    ((657976, 1048576, 0, 0, 1), Fraction(48825, 131072)),
    ((1017, 1024, 14, 16, 7), Fraction(51, 7184)),
    ((3, 4, 0, 0, 3), Fraction(1, 4)),
    ((4, 4, 0, 0, 3), Fraction(0, 1)),
    ((727722, 1048576, 0, 16, 4), Fraction(160429, 524290)),
]
AVAIL_CASES = [
    ((1000, 0, 4), 1000),
    ((1000, 4000, 4), 2000),
    ((1000, 4000, 1), 5000),
    ((986341, 7745961, 6), 2277334),
    ((176211, 1964541, 8), 421778),
    ((61818, 3660918, 5), 794001),
    ((135623, 4154287, 7), 729092),
    ((409940, 8330000, 2), 4574940),
    ((174447, 7536114, 7), 1251034),
    ((576129, 4661367, 3), 2129918),
    ((859077, 7222954, 9), 1661627),
    ((291945, 6967519, 6), 1453198),
    ((715887, 6382745, 4), 2311573),
    ((158252, 1392252, 3), 622336),
    ((158647, 3891590, 4), 1131544),
    ((12649, 8136324, 3), 2724757),
    ((275509, 4730012, 1), 5005521),
    ((152752, 7028755, 9), 933724),
    ((387190, 9501629, 6), 1970794),
    ((999395, 2105398, 9), 1233328),
    ((996382, 905850, 8), 1109613),
    ((943228, 9383022, 7), 2283659),
    ((417406, 6693754, 7), 1373656),
    ((108566, 8078612, 7), 1262653),
]
ENERGY_CASES = [
    (('dram', 'R', 1), 4.4),  # 1 x 4.4
    (('nvm', 'W', 32768), 553123.84),  # 32768 x 16.88
    (('nvm', 'R', 0), 0.0),  # 0 x 2.47
    (('dram', 'R', 204665440), 900527936.0),  # 204665440 x 4.4
    (('dram', 'R', 884736), 3892838.4),  # 884736 x 4.4
    (('nvm', 'W', 174271722), 2941706667.36),  # 174271722 x 16.88
    (('dram', 'R', 1441792), 6343884.8),  # 1441792 x 4.4
    (('dram', 'R', 109929257), 483688730.8),  # 109929257 x 4.4
    (('dram', 'R', 655360), 2883584.0),  # 655360 x 4.4
    (('dram', 'R', 390423180), 1717861992.0),  # 390423180 x 4.4
    (('dram', 'R', 327680), 1441792.0),  # 327680 x 4.4
    (('dram', 'W', 659351560), 3626433580.0),  # 659351560 x 5.5
    (('nvm', 'W', 655360), 11062476.8),  # 655360 x 16.88
    (('nvm', 'R', 373006685), 921326511.95),  # 373006685 x 2.47
    (('nvm', 'R', 1998848), 4937154.56),  # 1998848 x 2.47
    (('dram', 'R', 123859889), 544983511.6),  # 123859889 x 4.4
    (('nvm', 'W', 1966080), 33187430.4),  # 1966080 x 16.88
    (('nvm', 'W', 519513507), 8769387998.16),  # 519513507 x 16.88
    (('nvm', 'R', 360448), 890306.56),  # 360448 x 2.47
    (('dram', 'W', 109723117), 603477143.5),  # 109723117 x 5.5
    (('nvm', 'R', 1114112), 2751856.64),  # 1114112 x 2.47
    (('nvm', 'W', 889976687), 15022806476.56),  # 889976687 x 16.88
    (('dram', 'W', 98304), 540672.0),  # 98304 x 5.5
    (('dram', 'W', 567212063), 3119666346.5),  # 567212063 x 5.5
]
LIFETIME_CASES = [
    ((1073741824, 1000000.0, 1073741824, 1.0), 1000000.0),
    ((1073741824, 1000000.0, 1073741824, 0.53), 530000.0),
    ((67108864, 100000.0, 1, 0.25), 1677721600000.0),
    ((67108864, 3000000.0, 1, 0.25), 50331648000000.0),
    ((67108864, 3000000.0, 4096, 0.53), 26050560000.0),
    ((17179869184, 3000000.0, 112700000.0, 0.25), 114329209.29902396),
    ((17179869184, 3000000.0, 4096, 1.0), 12582912000000.0),
    ((1000000000000, 3000000.0, 4096, 1.0), 732421875000000.0),
    ((1000000000000, 1000000.0, 1, 1.0), 1e+18),
    ((67108864, 1000000.0, 4096, 0.25), 4096000000.0),
    ((67108864, 1000000.0, 112700000.0, 0.53), 315596.2548358474),
    ((1073741824, 100000.0, 4096, 0.53), 13893632000.0),
    ((17179869184, 1000000.0, 219444229, 0.25), 19572022.083114337),
    ((1073741824, 1000000.0, 112700000.0, 0.25), 2381858.527062999),
    ((1073741824, 3000000.0, 128745539, 0.25), 6255023.469201523),
    ((17179869184, 1000000.0, 4096, 0.53), 2222981120000.0),
    ((67108864, 100000.0, 859877753, 0.53), 4136.366802828541),
    ((1000000000000, 3000000.0, 4096, 1.0), 732421875000000.0),
    ((17179869184, 100000.0, 162296832, 0.25), 2646365.4546257565),
    ((17179869184, 3000000.0, 887458870, 0.25), 14518872.168126507),
    ((67108864, 100000.0, 4096, 1.0), 1638400000.0),
    ((1073741824, 3000000.0, 1, 0.25), 805306368000000.0),
    ((17179869184, 1000000.0, 4096, 1.0), 4194304000000.0),
    ((1073741824, 1000000.0, 112700000.0, 0.25), 2381858.527062999),
]
SLEEP_CASES = [
    ([10, 20, 30], Fraction(10, 1), 10),
    ([8], Fraction(4, 1), 4),
    ([], Fraction(0, 1), 0),
    ([4813, 2679, 2133, 4468], Fraction(14093, 8), 1761),
    ([1082, 507, 2907, 3762, 5435, 4787, 4242], Fraction(1623, 1), 1623),
    ([4118, 1080, 4365, 1252, 4297, 4191, 162], Fraction(19465, 14), 1390),
    ([1509, 4994, 41, 1236, 1420, 1168, 3887, 5080], Fraction(19335, 16), 1208),
    ([4567, 514], Fraction(5081, 4), 1270),
    ([5598, 4255, 4356, 4559, 3961, 878], Fraction(7869, 4), 1967),
    ([474, 2044, 1576, 2277, 354, 809, 4168, 3713, 4610], Fraction(2225, 2), 1112),
    ([528], Fraction(264, 1), 264),
    ([2676, 5026, 4150, 4974, 4204, 1642, 5683, 2279], Fraction(15317, 8), 1914),
    ([4171, 4377, 3925, 4168, 2037, 5736, 4295, 2135], Fraction(7711, 4), 1927),
    ([1668, 3675, 1132, 3422, 1005, 3223, 3630, 2597, 603], Fraction(6985, 6), 1164),
    ([3517, 608, 1751, 5493], Fraction(11369, 8), 1421),
    ([1011, 1274, 5875, 5280, 5417], Fraction(18857, 10), 1885),
    ([1180, 2082, 1133, 3840, 1807, 780], Fraction(5411, 6), 901),
    ([4000, 1342, 5479, 1841, 1331, 5795, 3544], Fraction(11666, 7), 1666),
    ([3317, 2787, 3460, 1612, 2930, 2618, 764, 5924, 3006], Fraction(4403, 3), 1467),
    ([2777], Fraction(2777, 2), 1388),
    ([3766, 3617, 5769, 157, 3157, 2724, 4247, 5120, 2429], Fraction(15493, 9), 1721),
    ([535, 933, 1881, 867, 697, 2184, 2236, 333, 1496], Fraction(5581, 9), 620),
    ([1070, 3468, 5546, 2127, 3334], Fraction(3109, 2), 1554),
    ([4404, 4226, 4683], Fraction(13313, 6), 2218),
]

# (fill, level): moderate from 3/5 inclusive, critical from 19/20 inclusive
CLASSIFY_CASES = [
    (Fraction(0), "none"),
    (Fraction(1, 2), "none"),
    (Fraction(59, 100), "none"),
    (Fraction(599, 1000), "none"),
    (Fraction(5999999, 10000000), "none"),
    (Fraction(3, 5), "moderate"),
    (Fraction(600001, 1000000), "moderate"),
    (Fraction(2, 3), "moderate"),
    (Fraction(3, 4), "moderate"),
    (Fraction(9, 10), "moderate"),
    (Fraction(949, 1000), "moderate"),
    (Fraction(18999999, 20000000), "moderate"),
    (Fraction(19, 20), "critical"),
    (Fraction(951, 1000), "critical"),
    (Fraction(99, 100), "critical"),
    (Fraction(1), "critical"),
    (0.0, "none"),
    (0.3, "none"),
    (0.5999999, "none"),
    (0.6, "moderate"),
    (0.75, "moderate"),
    (0.9499999, "moderate"),
    (0.95, "critical"),
    (1.0, "critical"),
]
