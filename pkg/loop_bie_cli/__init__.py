import os

# BLAS pools are sized when numpy loads
if os.environ.get("LOOP_BIE_THREADS"):
    for variable in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(variable, os.environ["LOOP_BIE_THREADS"])
