import os


def worker_count():
    """Thread cap from LDTRAJ_THREADS; 0 or unset means one worker per CPU."""
    raw = os.environ.get("LDTRAJ_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n
