"""A short version of the coverage/length comparison.

The full presets are available as ``hodeinfer simulate --preset table2-n100``.
"""
from hodeinfer import preset, run_study

cfg = preset("table2-n100")
cfg.replications = 10
report = run_study(cfg, progress=lambda done, total: print(f"  {done}/{total}", end="\r"))
print()
print(report.format_table())
print(f"{report.seconds:.0f}s")
