# Repairing a toy population with two input symbols.
#
# Two groups see input x in {0, 1} and a label y in {0, 1}.  Group 0 (weight
# 0.3) mostly has x=0, group 1 (weight 0.7) mostly has x=1.  We ask for the
# cheapest pair of repair channels whose outputs look alike across groups.

import numpy as np

from tvrepair import (Alphabet, GroupData, JointTable, Pmf, barycenter_value, push_forward,
                      solve_barycenter, solve_repair, sweep, tv_distance)

np.set_printoptions(precision=4, suppress=True)

joint_0 = JointTable.of([[0.6, 0.2],     # rows are x, columns are y
                         [0.1, 0.1]])
joint_1 = JointTable.of([[0.1, 0.1],
                         [0.3, 0.5]])
data = GroupData(joint_0, joint_1, Pmf(Alphabet(("minority", "majority")), np.array([0.3, 0.7])))

gap = tv_distance(data.q(0), data.q(1))
print("input marginals:", data.q(0).mass, data.q(1).mass, " tv =", round(gap, 4))

# Full parity: both repaired marginals must coincide.
plan = solve_repair(data, 0.0)
print("\nrho = 0")
print("channel for the minority group\n", plan.channel_0.rows)
print("channel for the majority group\n", plan.channel_1.rows)
print("repaired marginals:", push_forward(plan.channel_0, data.q(0)).mass,
      push_forward(plan.channel_1, data.q(1)).mass)
print("expected distortion", round(plan.objective, 6))

# The cheapest common marginal: only the lighter group has to move.
bar, value = solve_barycenter(data.q(0), data.q(1), data.pi)
print("\nbarycenter", bar.mass, "value", round(value, 6),
      "closed form", round(barycenter_value(data.q(0), data.q(1), data.pi), 6))

# Relaxing the budget buys back distortion at a rate of min(pi) per unit of rho,
# and once rho reaches the original gap nothing needs to change.
print("\nrho     objective  parity gap")
for p in sweep(data, np.linspace(0, 0.6, 7)):
    print(f"{p.rho:4.2f}   {p.objective:9.6f}  {p.parity_gap:9.6f}")
