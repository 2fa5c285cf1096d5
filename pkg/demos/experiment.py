"""Error bounds and corrected increment from the published process matrix."""
from asymcat import noise, protocols, tio, tomo
from asymcat.qcore import bloch

res = tomo.resolve_chi_convention()
ch = tomo.measured_channel(res)
print(f"convention {res.convention.value}, process fidelity {res.fidelity:.4f}")

s_in = bloch(*protocols.SYSTEM_IN_MEASURED, renormalize=True)
c_in = bloch(*protocols.CATALYST_IN_MEASURED, renormalize=True)
eps = noise.epsilon_bounds(ch, s_in, c_in)
print(f"eps_S {eps.eps_s:.4f}, eps_C {eps.eps_c:.4f}")

guard = tio.catalyst_return_guard(protocols.CATALYST_IN_MEASURED, protocols.CATALYST_OUT_MEASURED, eps.eps_c)
print(f"return guard: {guard.lhs:.4f} <= {guard.rhs:.4f} -> {guard.ok}")
d = noise.corrected_increment(protocols.SYSTEM_IN_MEASURED, protocols.SYSTEM_OUT_MEASURED, eps.eps_s)
print(f"corrected increment {d:.4f}")
