"""Evolve the smooth bump and print peak height, position and energy."""

import numpy as np

from nvwave import bundled, evolve_many

scn = bundled("smooth_bump")
state = scn.state()
times = [0.1, 0.2, 0.3, 0.4, 0.5]
print(f"t = 0.00  max u {state.u.max():.5f}  energy {state.total_energy():.12f}")
for T, out in zip(times, evolve_many(state, times, scn.model, scn.solver)):
    st = out.state
    k = int(np.argmax(st.u))
    print(f"t = {T:4.2f}  max u {st.u[k]:.5f} at x = {st.grid[k]:+.3f}  "
          f"energy {st.total_energy():.12f}")
