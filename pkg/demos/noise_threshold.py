"""Coarse noise threshold for the three protocols (21x21 catalyst grid)."""
from asymcat import noise

for name in ("main", "case1", "case2"):
    rep = noise.noise_threshold(name, p_step=0.001, p_max=0.03, grid=(21, 21))
    print(f"{name}: feasible region vanishes at p = {rep.p_bound}")
