"""Compile the published Kraus pair into wave-plate angles and trace one input."""
import math

import numpy as np

from asymcat import optics, protocols

sol = optics.solve_angles(protocols.K0_MAIN, protocols.K1_MAIN)
for k, t in zip(range(4, 8), sol.thetas):
    print(f"HWP{k}: {math.degrees(t):+9.4f} deg")
print(f"max deviation from the target Kraus entries: {sol.residual:.1e}")

x = np.array([0.5, 0.5, 0.5, 0.5])
states = sol.circuit().intermediate_states(optics.OpticalState.from_path_amplitudes(x))
for name, st in states.items():
    occupied = {optics.mode_label(m): round(float(a.real), 4)
                for m, a in enumerate(st.amplitudes) if abs(a) > 1e-12}
    print(f"{name}: {occupied}")
