"""Two-level tunneling probability over a (g, m) grid against the closed forms."""

from tachyon.analytic import tunneling_probability
from tachyon.landau_zener import LZConfig, lz_tunnel_probability
from tachyon.params import DiracParams

print("   m     g   kind      sweep   closed     diff")
for m in (0.5, 1.0, 2.0):
    p = 8.0 * max(1.0, m)
    for g in (0.5, 1.0, 2.0, 4.0, 8.0):
        for kind in ("normal", "tachyon"):
            params = DiracParams(m, kind)
            val = lz_tunnel_probability(LZConfig(p, -p, g, params))
            ref = tunneling_probability(params, g)
            print(f"{m:4.1f} {g:5.1f}   {kind:8s} {val:7.4f} {ref:8.4f} {val - ref:+8.1e}")
