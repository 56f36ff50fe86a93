from setuptools import setup

if __name__ == "__main__":
    setup(
        py_modules=[
            "errors",
            "counters",
            "field_arith",
            "minmax_algebra",
            "omv_pred",
            "partially_dynamic",
            "matrix_inverse_pred",
            "graph_reductions",
            "predicted_deletions",
            "generators",
            "oracles",
            "scripts",
            "robust",
            "bench",
            "cache",
            "dynoracle",
        ]
    )
