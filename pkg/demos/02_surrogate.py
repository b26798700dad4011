"""Learn transfer times from optimal-control labels.

Labels a small corpus of random pairs (a few minutes on one CPU), trains a
small sigmoid network and compares it with a least-squares baseline on the
same validation split.  The desk-scale run uses 2000 pairs and 5000 epochs
(``sailtour pipeline --preset desk``); this demo only shows the moving parts.
At this size the network usually overfits and can lose to the linear fit.
"""
from sailtour import dataset as ds
from sailtour import net

data = ds.generate_dataset(120, seed=4, best_of=2, max_guesses=60,
                           progress=lambda k, n: k % 20 == 0 and print(f"  labelled {k}/{n}"))
print(f"{len(data)} labelled pairs, drop rate {ds.drop_rate(data):.1%}")
train_set, val_set = ds.split_dataset(data, 0.9, seed=0)

Xt, yt = train_set.features("COE"), train_set.labels()
Xv, yv = val_set.features("COE"), val_set.labels()
print(f"labels: {yt.min():.0f} to {yt.max():.0f} days")

model = net.init_model(Xt.shape[1], [30, 30], "sigmoid", seed=0)
cfg = net.TrainConfig(batch_size=20, epochs=1500, seed=0, eval_every=250)
model, hist = net.train(model, Xt, yt, Xv, yv, cfg,
                        callback=lambda e, tr, va: print(f"  epoch {e:5d}  train MAE {tr.mae_days:6.1f} d  "
                                                         f"val MAE {va.mae_days:6.1f} d"))
lin, _ = net.train_linear_baseline(Xt, yt)
m_net, m_lin = net.evaluate(model, Xv, yv), net.evaluate_linear(lin, Xv, yv)
print(f"\nvalidation  network: accuracy {m_net.accuracy:.3f}, MAE {m_net.mae_days:.1f} d")
print(f"validation  linear:  accuracy {m_lin.accuracy:.3f}, MAE {m_lin.mae_days:.1f} d")
net.save_model(model, "demo_model.json")
print("model written to demo_model.json")
