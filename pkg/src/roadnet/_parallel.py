import os
from concurrent.futures import ThreadPoolExecutor


def max_threads():
    """Worker cap from ``ROADNET_THREADS`` (default: CPU count, at most 8)."""
    env = os.environ.get("ROADNET_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def pmap(fn, items):
    """Order-preserving parallel map; serial when a single worker is allowed."""
    items = list(items)
    n = min(max_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
