"""Score a genuine and an impostor pair with the three matcher configurations.

    python demos/02_matching.py
"""

import time

from minudesc import Pipeline, SynthParams, build_training_set, generate_database, train
from minudesc.matching import match, reference_count, system1, system2, system3

transform = train(build_training_set(30, SynthParams(), seed=1000))
pipe = Pipeline(transform=transform)

db = generate_database(21, 2, SynthParams(impressions=2))
(a1, a2), (b1, _) = [[pipe.template(img) for img, _ in imps] for _, imps in db]
print(f"templates: {len(a1)}, {len(a2)} minutiae (finger 1), {len(b1)} (finger 2)\n")

print(f"{'system':<24}{'pair':<10}{'sim1':>8}{'sim2':>7}{'sim':>9}{'pairs':>7}{'refs':>6}{'ms':>8}")
for name, params in (("system1 count, no gate", system1()), ("system2 SimD, gated", system2()),
                     ("system3 top 3% refs", system3(3))):
    for label, (x, y) in (("genuine", (a1, a2)), ("impostor", (a1, b1))):
        t0 = time.perf_counter()
        r = match(x, y, params)
        ms = 1000 * (time.perf_counter() - t0)
        print(f"{name:<24}{label:<10}{r.sim1:8.1f}{r.sim2:7.2f}{r.sim:9.1f}{len(r.pairs):7d}"
              f"{r.n_references:6d}{ms:8.1f}")

n = reference_count(len(a1), len(a2), 3)
print(f"\nat pro = 3% only {n} of {len(a1) * len(a2)} minutia pairs seed an alignment")
