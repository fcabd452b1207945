"""Two unit atoms at the origin (the `example3` data) split into a left- and a
right-moving atom; print their positions and masses over time."""

from nvwave import bundled, evolve_many

scn = bundled("example3")
times = [0.0, 0.25, 0.5, 1.0]


def visible(atoms, floor=1e-6):
    return [(round(x, 6), round(m, 6)) for x, m in atoms if m > floor]


for T, out in zip(times, evolve_many(scn.state(), times, scn.model, scn.solver)):
    st = out.state
    print(f"t = {T:4.2f}  mu atoms {visible(st.mu.atoms)}  nu atoms {visible(st.nu.atoms)}  "
          f"energy {st.total_energy():.12f}")
