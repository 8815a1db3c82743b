import time, json, sys
import numpy as np
from dataclasses import replace
from irrpinn.problems import build_problem
from irrpinn.problems.fisher import make_evaluator, predict_on_grid
from irrpinn.reference.fisher_fd import fd_fisher
from irrpinn.reference.metrics import relative_l2
from irrpinn.trainer import train
from irrpinn.losses import LossWeights

ref = fd_fisher()
prob = build_problem("traveling_wave")
cfg = replace(prob.training, epochs=3500, n_adaptive=800, log_interval=100,
              weighting=LossWeights(alpha_w=0.9, update_interval=25, max_weight=100.0))
ev = make_evaluator(prob, ref)
t0 = time.time()
res = train(prob, cfg, evaluate=ev)
wall = time.time() - t0
pred = predict_on_grid(prob, res.params, ref.axis("x"), ref.axis("t"))
rl2 = relative_l2(pred, ref.fields["u"])
print("wall", wall, "rel_l2", rl2, flush=True)
for r in res.history.rows[::4]:
    print({k: (round(v,4) if isinstance(v,float) else v) for k,v in r.items()}, flush=True)
x = ref.axis("x"); t = ref.axis("t"); u = ref.fields["u"]
out = {"rel_l2": rl2, "wall": wall}
for tv in (2.0, 5.0, 10.0, 15.0, 20.0):
    it = int(round(tv/0.02))
    out[f"t{tv}"] = {"x": x[::50].tolist(), "ref": u[it, ::50].round(4).tolist(),
                     "pred": pred[it, ::50].round(4).tolist()}
json.dump(out, open(".devruns/tw3_profiles.json","w"))
