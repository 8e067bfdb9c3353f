"""
Benchmark report
================

Runs both classifiers in both modes on the bundled datasets over several
seeds and prints the markdown tables. The same runs are available from the
command line as ``kernelgamma bench``. Expect a couple of minutes, most of
it spent in the SVM grid search.
"""

from kernelgamma.bench import BenchConfig, DatasetConfig, emit_report, run_benchmark

config = BenchConfig(
    [DatasetConfig.from_spec("builtin:diabetes"), DatasetConfig.from_spec("builtin:breast_cancer")],
    seeds=range(3),
)
reports = run_benchmark(config)
print(emit_report(reports, "markdown").decode())

# Every run is also available as a record, e.g. for CSV export.
print(emit_report(reports, "csv").decode().splitlines()[0])
