"""Apply the published two-Kraus channel to the example states and compare
it with the best catalytic TIO for the same states."""
import numpy as np

from asymcat import catalysis, protocols, qcore as q, tio

spec = protocols.get("main")
rho_s, rho_c = spec.system_state(), spec.catalyst_state()
ch = spec.channel()
out = ch(np.kron(rho_s.mat, rho_c.mat))
s_out = q.partial_trace(out, (2, 2), keep=0)
c_out = q.partial_trace(out, (2, 2), keep=1)
ctx = tio.build_mask((0, 1), (0, 1))

print("system in      ", np.round(rho_s.bloch(), 4))
print("system out     ", np.round(q.density_to_bloch(s_out), 4))
print("catalyst return", f"{0.5 * q.trace_norm(c_out - rho_c.mat):.1e} (trace distance)")
print("TIO deviation  ", tio.tio_deviation(ch, ctx))
print("increment      ", f"{2 * abs(s_out[0, 1]) - 2 * abs(rho_s.mat[0, 1]):.5f}")

best = catalysis.optimal_tio_channel(catalysis.CatalysisInstance(rho_s, rho_c, ctx))
print("SDP optimum    ", f"{best.increment:.5f} (same states, best catalytic TIO)")
