"""Published reference values used by the test-suite."""

# (m, x, pdf, pdf_landau, cdf, cdf_landau), equal weights
HCCT_TABLE = [
    (2, 0.2, 0.292879165, 0.282722127, 0.030804228, 0.223733981),
    (2, 2, 0.164879638, 0.139681018, 0.639966151, 0.621681447),
    (2, 10, 0.007305301, 0.008434884, 0.930504308, 0.923528833),
    (2, 50, 0.000267851, 0.000282679, 0.986896089, 0.986491736),
    (10, 1, 0.298436871, 0.267219180, 0.084662651, 0.161603641),
    (10, 4, 0.081183591, 0.083422558, 0.740788721, 0.727771746),
    (10, 10, 0.009975760, 0.010582384, 0.916911594, 0.913846326),
    (10, 50, 0.000290372, 0.000295108, 0.986315767, 0.986195804),
    (100, 2, 0.158076048, 0.169847092, 0.040232564, 0.056630205),
    (100, 5, 0.105381463, 0.106135365, 0.687530806, 0.683873904),
    (100, 10, 0.015109635, 0.015315611, 0.895973685, 0.895170441),
    (100, 50, 0.000313579, 0.000314359, 0.985767643, 0.985749325),
    (1000, 4, 0.277750260, 0.274061911, 0.177916458, 0.180088077),
    (1000, 7, 0.080390569, 0.080617466, 0.733973017, 0.733369559),
    (1000, 10, 0.023685955, 0.023750783, 0.867373631, 0.867174483),
    (1000, 50, 0.000335429, 0.000335545, 0.985275813, 0.985273239),
]

EHMP_TABLE = [
    (2, 2, 0.303993203, 0.150080964, 0.362673464, 0.433900891),
    (2, 10, 0.012418123, 0.014947778, 0.885277805, 0.868002274),
    (2, 50, 0.000432721, 0.000471188, 0.979080976, 0.978043335),
    (10, 4, 0.155679561, 0.133578865, 0.492596674, 0.489298321),
    (10, 10, 0.019829249, 0.021397821, 0.847965230, 0.839184630),
    (10, 50, 0.000491781, 0.000505060, 0.977583372, 0.977258199),
    (100, 2, 0.000000387, 0.000554016, 0.000000015, 0.000068807),
    (100, 5, 0.191884746, 0.179262887, 0.274570971, 0.281827251),
    (100, 10, 0.038837066, 0.039487463, 0.774900747, 0.771927461),
    (100, 50, 0.000557767, 0.000560181, 0.976086590, 0.976033423),
    (1000, 4, 0.000009348, 0.000043914, 0.000000671, 0.000004086),
    (1000, 7, 0.182779813, 0.180180123, 0.225626049, 0.227272659),
    (1000, 10, 0.083072268, 0.083192398, 0.639103576, 0.638216812),
    (1000, 50, 0.000624345, 0.000624742, 0.974679223, 0.974671236),
]

# 5% thresholds: weights -> (HCCT, EHMP)
THRESHOLDS_95 = [
    ([0.5, 0.5], 13.69, 21.73),
    ([0.8, 0.2], 13.39, 21.19),
    ([0.2] * 5, 14.74, 23.51),
    ([0.6, 0.1, 0.1, 0.1, 0.1], 14.24, 22.64),
    ([1 / 26] * 26, 16.19, 25.85),
]

# p-values -> (Fisher, Stouffer, Bonferroni, CCT, HCCT, EHMP), equal weights
COMBINED = [
    ((0.02, 0.03, 0.96), (0.021, 0.104, 0.060, 0.051, 0.039, 0.039)),
    ((0.02, 0.03, 0.98), (0.021, 0.139, 0.060, 0.088, 0.039, 0.039)),
    ((0.02, 0.03, 0.99), (0.021, 0.177, 0.060, 0.837, 0.039, 0.039)),
    ((0.015, 0.9, 0.96), (0.192, 0.691, 0.045, 0.091, 0.050, 0.049)),
    ((0.02, 0.02, 0.8, 0.98), (0.040, 0.272, 0.080, 0.086, 0.045, 0.045)),
    ((0.01, 0.05, 0.3, 0.5, 0.99), (0.040, 0.166, 0.050, 0.197, 0.046, 0.046)),
]
COMBINED_METHODS = ("fisher", "stouffer", "bonferroni", "cct", "hcct", "ehmp")
