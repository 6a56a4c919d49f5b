# %% [markdown]
# # Building a sync pattern
#
# The pattern repeats the base symbol x_bar and puts noise symbols on a grid of period
# K, switched on and off by an m-sequence. Shifted copies of the pattern therefore
# differ from the original in many positions.

# %%
from framesync import bsc, build_pattern, generate_msequence, min_shift_distance
from framesync.pattern import shift_distances

# %% m-sequences are at distance (l+1)/2 from every nontrivial cyclic shift
seq = generate_msequence(4)
print(seq.polynomial(), "".join(map(str, seq.bits)))

# %% A small pattern: X is the base symbol, '.' the noise symbol
p = build_pattern(bsc(0.1), 21, 3)
print(p.render())
print("stars:", p.n_stars, "of", p.N, " m =", p.m)
print("distance to each shift:", shift_distances(p).tolist())

# %% The minimum shift distance grows roughly linearly in N
for N in (64, 128, 256, 512, 1024):
    q = build_pattern(bsc(0.1), N, 8)
    d, at = min_shift_distance(q)
    print(f"N={N:5d} m={q.m:2d} min distance {d:4d} at shift {at}")
