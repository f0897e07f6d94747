import os

from hypothesis import settings

# compiled kernels load from the numba cache on first use, which can take
# longer than hypothesis' default per-example deadline
settings.register_profile("thermolab", deadline=None, max_examples=50)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "thermolab"))
