import time, numpy as np
from irrpinn.problems.corrosion import CorrosionParams
from irrpinn.reference.corrosion_fd import fd_corrosion, corrosion_depth

p = CorrosionParams()
t0 = time.time()
sol = fd_corrosion(p, frame_times=np.linspace(0, 30, 16))
print("fd_corrosion:", time.time()-t0, "s; steps:", sol.meta["steps"], flush=True)
t, depth = corrosion_depth(sol)
print("depth(t):", list(zip(t.round(1).tolist(), depth.round(2).tolist())))
for k, v in sol.meta["monitor_phi"].items():
    arr = np.asarray(v)
    print(k, "start", arr[0].round(3), "end", arr[-1].round(3),
          "max increase:", float(np.max(np.diff(arr))) if len(arr) > 1 else 0.0)
# mass conservation in the all-no-flux configuration
t0 = time.time()
ref = fd_corrosion(p, nx=51, ny=26, frame_times=[0.0, 30.0], mouth_bc=False)
c0 = ref.fields["c"][0].sum(); c1 = ref.fields["c"][-1].sum()
print("no-flux mass drift %:", 100*abs(c1-c0)/c0, "steps:", ref.meta["steps"], time.time()-t0)
