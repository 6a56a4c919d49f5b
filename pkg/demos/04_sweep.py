# %% [markdown]
# # Error rates across N and alpha
#
# On BSC(0.4) the threshold is about 0.081 nats. Above it, even the genie-aided block
# ML decoder fails more and more often as N grows. Below it the guarantee is only
# asymptotic: at these pattern lengths both decoders still get worse with N, the
# sliding ML decoder more slowly. Runs in a few seconds.

# %%
from framesync import DecoderId, bsc, run_sweep, sync_threshold
from framesync.sim import records_to_csv

channel = bsc(0.4)
print("threshold:", round(sync_threshold(channel).value, 6))

# %% Sliding ML below the threshold (alpha = 0.04)
below = run_sweep([(N, 0.04) for N in (40, 80, 120)], channel, 8, 0.05, 300, 0,
                  [DecoderId.TYPICALITY, DecoderId.SLIDING_ML])
for r in below:
    print(f"N={r.N:4d} A={r.A:5d} {r.decoder.value:<11} error {r.error_rate:.3f} +- {r.ci95_halfwidth:.3f}")

# %% Block ML above the threshold (alpha = 0.15)
above = run_sweep([(N, 0.15) for N in (40, 80)], channel, 8, 0.05, 300, 0,
                  [DecoderId.BLOCK_ML], nu_mode="block")
for r in above:
    print(f"N={r.N:4d} A={r.A:7d} block_ml    error {r.error_rate:.3f} +- {r.ci95_halfwidth:.3f}")

# %% Same records as CSV
print(records_to_csv(below + above))
