import time, json
import numpy as np
from dataclasses import replace
from irrpinn.problems import build_problem
from irrpinn.problems.fisher import make_evaluator, predict_on_grid
from irrpinn.reference.fisher_fd import fd_fisher
from irrpinn.reference.metrics import relative_l2
from irrpinn.trainer import train

ref = fd_fisher()
out = {}
for mode in ("irr", "baseline"):
    prob = build_problem("traveling_wave")
    cfg = prob.training
    if mode == "baseline":
        cfg = replace(cfg, irr_weight_mode="off")
    ev = make_evaluator(prob, ref)
    t0 = time.time()
    res = train(prob, cfg, evaluate=ev)
    wall = time.time() - t0
    pred = predict_on_grid(prob, res.params, ref.axis("x"), ref.axis("t"))
    rl2 = relative_l2(pred, ref.fields["u"])
    out[mode] = dict(wall=wall, rel_l2=rl2, aborted=res.aborted,
                     final_irr=res.history.last("loss_irr_total"),
                     rows=[{k: r.get(k) for k in ("step","loss_total","rel_l2","loss_irr_total","w_irr","eps_c")} for r in res.history.rows[::5]])
    print(mode, "wall", wall, "rel_l2", rl2, "irr", out[mode]["final_irr"], flush=True)
json.dump(out, open("/root/pkg/.devruns/tw_result.json","w"), indent=1)
