# What a privacy budget buys in fairness, and what it costs in distortion.
#
# A single eps-private channel shared by both groups can leave a parity gap of
# at most 1 - exp(-eps).  The other side of the trade is how far such a channel
# must move the data.  Below we tabulate both curves and then look at two
# concrete channels.

import math

import numpy as np

from tvrepair import (dobrushin_coefficient, dp_bounds_table, effective_epsilon,
                      k_randomized_response, push_forward, randomized_response, tv_distance)
from tvrepair.prob import Pmf

print(" eps   gap ceiling   distortion scale")
for eps, fair, util in dp_bounds_table(np.arange(0, 5.01, 0.5)):
    print(f"{eps:4.1f}   {fair:10.4f}   {util:10.4f}")

# Two constructions of a "randomized response" channel.  The first keeps the
# input with probability 1 - exp(-eps); the second is the textbook k-ary one.
# Their actual privacy levels differ, which matters for small budgets.
print("\n eps    n   keep-w.p. 1-exp(-eps)   k-ary")
for eps in (0.1, 0.5, math.log(2), 1.0, 3.0):
    for n in (2, 5):
        a = effective_epsilon(randomized_response(eps, n))
        b = effective_epsilon(k_randomized_response(eps, n))
        print(f"{eps:5.3f}  {n}   {a:12.4f}            {b:8.4f}")

# A worst-case pair of groups: perfectly separated inputs.
q0, q1 = Pmf.of([1.0, 0.0]), Pmf.of([0.0, 1.0])
print("\n eps   gap after k-ary   ceiling   contraction")
for eps in (0.1, 0.5, 1.0, 2.0, 4.0):
    t = k_randomized_response(eps, 2)
    gap = tv_distance(push_forward(t, q0), push_forward(t, q1))
    print(f"{eps:4.1f}   {gap:12.4f}   {1 - math.exp(-eps):8.4f}   {dobrushin_coefficient(t):8.4f}")
