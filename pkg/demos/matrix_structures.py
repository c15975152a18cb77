"""
Recipe diversity and estimation accuracy
========================================

The input-mass matrix decides how well individual scrap types can be told
apart. Compare the four generated structures for Cu (Kalman filter) and
Cr (unscented filter).
"""

from scrapfilter import ScenarioConfig
from scrapfilter.sensitivity import matrix_comparison

res = matrix_comparison(ScenarioConfig(T=4000), seeds=(0,), burn_in=1000)

print(f"{'matrix':>12} {'rank':>5} {'cond':>10} {'std Cu':>8} {'std Cr':>8} {'rmse 45':>8}")
for r in res.rows:
    print(f"{r['label']:>12} {r['rank']:5d} {r['cond']:10.3g} {r['std_cu_ppm']:8.2f} "
          f"{r['std_cr_ppm']:8.2f} {r['rmse_scrap45_ppm']:8.1f}")
