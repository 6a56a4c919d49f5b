# %% [markdown]
# # Three decoders on one trial
#
# A trial draws the start time nu, feeds the pattern through the channel surrounded
# by noise, and hands the same output stream to each decoder.

# %%
from framesync import DecoderId, TrialConfig, bsc, build_pattern, run_trial
from framesync.sim import _prepare
from framesync.decoders import log_likelihood_ratios

channel = bsc(0.3)
pattern = build_pattern(channel, 32, 4)
cfg = TrialConfig(channel, pattern, alpha=0.1, mu=0.1, seed=3)
print("A =", cfg.A)

# %%
outcome = run_trial(cfg, [DecoderId.TYPICALITY, DecoderId.SLIDING_ML, DecoderId.BLOCK_ML])
print("nu =", outcome.nu)
for v in outcome.verdicts:
    print(f"{v.decoder.value:<11} start={v.declared_start} stop={v.stop_time} -> {outcome.miss(v.decoder)}")

# %% The sliding ML decoder maximizes the log-likelihood ratio over start times
nu, stream = _prepare(cfg)
L = log_likelihood_ratios(pattern, channel, stream.materialize(), cfg.A)
print("top start times:", (L.argsort()[::-1][:5] + 1).tolist(), " true:", nu)
