"""A sigmoid front steepens and breaks; the energy stays constant while the
largest |u_x| grows."""

import numpy as np

from nvwave import bundled, evolve_many

scn = bundled("breaking")
state = scn.state()
times = scn.times
for T, out in zip(times, evolve_many(state, times, scn.model, scn.solver)):
    st = out.state
    ux = np.gradient(st.u, st.grid)
    print(f"t = {T:4.2f}  max |u_x| {np.abs(ux).max():8.3f}  "
          f"energy {st.total_energy():.12f}  atoms {len(st.mu.atoms) + len(st.nu.atoms)}")
