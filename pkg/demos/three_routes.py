"""Three independent routes to the same S-matrix.

The reference solver integrates the equation directly.  The Airy route
builds Jost solutions from the turning-point comparison equation, and the
Bessel route builds the far-side solution from the inverse-square normal
form.  They share no semiclassical code, so agreement is a real check.
"""
from inv2scatter import rational, smatrix_bessel, smatrix_reference, smatrix_wkb

HBAR = 0.1
E = 0.3


def main():
    spec = rational(2.0, 6.0)
    ref = smatrix_reference(spec, E, HBAR)
    airy = smatrix_wkb(spec, E, HBAR, refined=True)
    bes = smatrix_bessel(spec, E, HBAR)
    print(f"asymmetric barrier (mu+^2 = 2, mu-^2 = 6), E = {E}, hbar = {HBAR}")
    print(f"reference log t = {ref.log_t:.10f}")
    for name, m in (("airy", airy), ("bessel", bes)):
        et, em, ep = m.relative_error(ref)
        print(f"{name:>7}: rel err t {et:.1e}, r- {em:.1e}, r+ {ep:.1e}")


if __name__ == "__main__":
    main()
