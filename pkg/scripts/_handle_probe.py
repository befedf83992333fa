"""Dev probe: trace every handle code with |lam|+|om| <= 3 and report."""
import itertools
import time

from henonlocus.dynamics import Params
from henonlocus.region import region_constants
from henonlocus.locus import trace_handle
from henonlocus.coding import SymbolCode

p = Params(-25, 0.1)
rc = region_constants(p)
codes = []
for k in range(4):
    for m in range(4 - k):
        for lam in itertools.product((0, 1), repeat=k):
            for om in itertools.product((0, 1), repeat=m):
                codes.append(SymbolCode(lam, om))
t0 = time.time()
nfail = 0
for code in codes:
    t1 = time.time()
    try:
        h = trace_handle(p, rc, code, resolution=32, with_diagnostics=False)
        print(code, f'OK {time.time()-t1:.2f}s', flush=True)
    except Exception as e:
        nfail += 1
        print(code, f'ERR {type(e).__name__} {str(e)[:50]} {time.time()-t1:.2f}s', flush=True)
print('TOTAL', f'{time.time()-t0:.1f}s', 'fail', nfail, flush=True)
