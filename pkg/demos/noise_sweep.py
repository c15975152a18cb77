"""
Sensitivity to noisy process measurements
=========================================

Inject multiplicative Gaussian noise into one measured input at a time and
watch the prediction error grow. Each seed reuses the same draws at every
level, so rows differ only through the injected noise.
"""

from scrapfilter import ScenarioConfig
from scrapfilter.sensitivity import sweep

base = ScenarioConfig(T=4000)

for target, elements in (("scrap_mass", ("cu",)), ("slag_mass", ("cu", "cr")), ("feon", ("cr",))):
    res = sweep(base, target, [0.0, 0.05, 0.2], seeds=(0, 1), elements=elements, burn_in=1000)
    print(f"\n{target} noise")
    for level in (0.0, 5.0, 20.0):
        cells = [f"{el} std {res.mean(f'std_{el}_ppm', level_pct=level):6.2f}" for el in elements]
        print(f"  {level:4.0f}%  " + "  ".join(cells))

# slag mass does not enter the Cu model: its rows are identical at every level
