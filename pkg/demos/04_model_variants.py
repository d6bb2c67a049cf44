"""The three model variants on one dataset.

m1 keeps the fixed gamma base over precisions, m2 refits that base to the
within-cluster spread every sweep, and m3 drops conjugacy entirely and
conditions the precisions on the distances between cluster centers.  A
non-conjugate chain explores by proposing parameters from the base, so
m3 mixes far more slowly than the conjugate variants and wants much
longer runs than this quick comparison gives it.

Takes a few minutes (m3 is the slow one).
Run:  python3 demos/04_model_variants.py
"""

from dpsc import (
    SamplerConfig,
    SynthConfig,
    extract_prediction,
    full_report,
    run_chains,
    standardize,
    synth_gaussian,
)

dataset = synth_gaussian(
    SynthConfig(
        n_train_classes=4, n_test_classes=3, dim=4,
        min_class_size=30, max_class_size=40, separation=4.0, seed=21,
    )
)
std, _ = standardize(dataset)
gold = std.gold_partition("test")
print(f"test portion: {gold.n_items} items, {gold.n_clusters} classes")

print(f"{'variant':<8} {'F':>6} {'NES':>6} {'NVI':>6} {'clusters':>9}")
for variant in ("m1", "m2", "m3"):
    config = SamplerConfig(
        variant=variant, iterations=1500, burn_in=750, n_chains=2, seed=2,
        resample_alphas=True,
    )
    prediction = extract_prediction(run_chains(std, config))
    rep = full_report(gold, prediction)
    print(
        f"{variant:<8} {rep.f_score:6.3f} {rep.nes:6.3f} {rep.nvi:6.3f} "
        f"{prediction.n_clusters:9d}"
    )
