"""Monte-Carlo maximum likelihood, from a network or from targets alone.

Each iteration simulates at the current coefficients, pulls the
observed statistic into the sample's convex hull (so the update has a
finite maximizer), and solves the tilted Newton step.  Three stopping
rules are available; `confidence` is the default.  When only target
statistics are known, annealing first builds a starting network that
attains them exactly.
"""

import math

from ergmkit import (McmleControl, Network, SanConfig, bind, mcmle_fit,
                     san_run)

# fitting an edges-only model to a target of 30 edges on 10 nodes:
# the exact MLE is logit(30/45) = log 2
net = Network(10)
model = bind("edges", net)
control = McmleControl(samplesize=512, interval=20, maxit=20, seed=0)
fit = mcmle_fit(net, model, g_obs=[30.0], init=[0.0], control=control)
print("edges coefficient: %.4f  (log 2 = %.4f)" % (fit.coefs[0], math.log(2)))
print("converged via %r in %d iterations" % (fit.termination, fit.iterations))
print("standard error: %.3f" % fit.standard_errors()[0])

# the same fit under each stopping rule
for rule in ("hotelling", "hummel", "confidence"):
    control = McmleControl(samplesize=512, interval=20, maxit=20, seed=1,
                           termination=rule)
    f = mcmle_fit(net, model, g_obs=[30.0], init=[0.0], control=control)
    print(f"rule {rule:<11} stopped after {f.iterations} iterations "
          f"at {f.coefs[0]:.4f}")

# target-statistics workflow: anneal a start, then estimate
start = Network(10)
san_config = SanConfig(targets=[30.0], seed=2)
start, _ = san_run(start, model, san_config)
print("\nannealed starting network has", start.edge_count, "edges")
fit2 = mcmle_fit(start, model, control=McmleControl(samplesize=512,
                                                    interval=20, seed=3))
print("fit from the annealed start: %.4f" % fit2.coefs[0])
