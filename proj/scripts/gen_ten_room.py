#!/usr/bin/env python3
"""Regenerates data/ten_room.model.

Ten rooms on a star-of-stars floor plan; rooms 2 and 5 have heaters. The
heater term a_H*(T_h - x)*u is linearized at T* = 19.5 (mid comfort zone) and
all constant source terms (exterior leak a_e*T_e, linearized heater offset)
are carried by a third always-one input channel, keeping the model linear.
"""
import sys

n = 10
adj = {1: [2], 2: [1, 7, 9, 3], 3: [2, 4], 4: [3, 5],
       5: [4, 8, 10, 6], 6: [5], 7: [2], 8: [5], 9: [2], 10: [5]}
ae = {i: 0.005 for i in range(1, 11)}
ae[2] = ae[5] = 0.008
aij = 0.05
aH = 3.6e-3
Te = 15.0
Th = 100.0
at1 = 1e-4       # delayed self-coupling (tau1)
g = 2e-3         # diffusion gain per room
gt2 = 1e-4       # delayed diffusion gain (tau2)
r = 1e-3         # jump gain per room
lam = 0.1
Tstar = 19.5

A1 = [[0.0] * n for _ in range(n)]
for i in range(1, 11):
    A1[i - 1][i - 1] = -(aij * len(adj[i]) + ae[i])
    for j in adj[i]:
        A1[i - 1][j - 1] = aij
A2 = [[-at1 if i == j else 0.0 for j in range(n)] for i in range(n)]
B = [[0.0] * 3 for _ in range(n)]
B[1][0] = aH * (Th - Tstar)
B[4][1] = aH * (Th - Tstar)
for i in range(1, 11):
    B[i - 1][2] = ae[i] * Te


def flat(mat):
    return ", ".join("%.17g" % v for row in mat for v in row)


def diag(v, idx):
    return flat([[v if (i == j == idx) else 0.0 for j in range(n)] for i in range(n)])


out = sys.stdout
out.write("# ten-room building, two heaters (rooms 2 and 5)\n")
out.write("[model]\n")
out.write("n = 10\nm = 3\ntau1 = 15\ntau2 = 10\ntau3 = 0\n")
out.write("A1 = [%s]\n" % flat(A1))
out.write("A2 = [%s]\n" % flat(A2))
out.write("B = [%s]\n" % flat(B))
for i in range(n):
    out.write("G%d = [%s]\n" % (i + 1, diag(g, i)))
for i in range(n):
    out.write("Gbar%d = [%s]\n" % (i + 1, diag(gt2, i)))
for i in range(n):
    out.write("R%d = [%s]\n" % (i + 1, diag(r, i)))
for i in range(n):
    out.write("Rbar%d = [%s]\n" % (i + 1, diag(0.0, i)))
out.write("lambda = [%s]\n" % ", ".join("%.17g" % lam for _ in range(n)))
out.write("\n[input]\n")
out.write("# heater 2 on / heater 5 on / both off; third channel is the\n")
out.write("# constant-1 carrier for the affine terms\n")
out.write("points = [[1, 0, 1], [0, 1, 1], [0, 0, 1]]\n")
out.write("\n[region]\n")
out.write("lo = [%s]\n" % ", ".join("14" for _ in range(n)))
out.write("hi = [%s]\n" % ", ".join("23" for _ in range(n)))
