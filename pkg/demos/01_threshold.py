# %% [markdown]
# # Synchronization threshold of a channel
#
# The threshold is the largest KL divergence between an input row Q(.|x) and the
# noise row Q(.|star). The input that attains it becomes the pattern's base symbol.

# %%
import math

import numpy as np

from framesync import bsc, bsc_threshold, kl_divergence, sync_threshold
from framesync.channel import from_rows

# %% Binary symmetric channels
for p in (0.05, 0.1, 0.2, 0.3, 0.4):
    value, x_bar, _ = sync_threshold(bsc(p))
    print(f"BSC({p:.2f}): threshold {value:.6f} nats (closed form {bsc_threshold(p):.6f}), x_bar={x_bar}")

# %% A ternary channel: the best row is not always the "opposite" of the noise row
Q = from_rows(
    [
        [0.80, 0.15, 0.05],  # noise symbol
        [0.10, 0.80, 0.10],
        [0.30, 0.30, 0.40],
    ],
    star=0,
)
for x in range(Q.n_inputs):
    print(f"D(Q(.|{x}) || Q(.|star)) = {kl_divergence(Q, x):.4f}")
print("threshold:", sync_threshold(Q))

# %% When the noise row misses an output some input can produce, the threshold is infinite
Z = from_rows([[1.0, 0.0], [0.5, 0.5]], star=0)
assert math.isinf(sync_threshold(Z).value)
print("Z-channel-like threshold:", sync_threshold(Z).value)

# %% Threshold vs crossover probability
ps = np.linspace(0.01, 0.49, 9)
print(np.round([bsc_threshold(p) for p in ps], 4))
