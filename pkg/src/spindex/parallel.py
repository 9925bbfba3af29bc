"""Process-based fan-out for per-partition maintenance work.

Workers are forked, so task closures see a snapshot of the parent state at
fork time and only the returned values travel back (over a pipe).  Callers
therefore re-apply returned diffs to the parent-side structures; with one
worker everything runs inline and mutations take effect directly.
"""

from __future__ import annotations

import multiprocessing
import os


def run_tasks(fn, args, workers=1):
    """Apply fn to each element of args, preserving order.

    With workers > 1 the args are chunked round-robin over forked worker
    processes.  Falls back to inline execution when forking is unavailable
    or there is nothing to parallelize.
    """
    if workers <= 1 or len(args) <= 1 or not hasattr(os, "fork"):
        return [fn(a) for a in args]
    workers = min(workers, len(args))
    ctx = multiprocessing.get_context("fork")
    chunks = [list(range(i, len(args), workers)) for i in range(workers)]
    pipes = []
    procs = []
    for chunk in chunks:
        parent_conn, child_conn = ctx.Pipe(duplex=False)
        p = ctx.Process(target=_worker, args=(fn, args, chunk, child_conn))
        p.start()
        child_conn.close()
        pipes.append((parent_conn, chunk))
        procs.append(p)
    results = [None] * len(args)
    failure = None
    for (conn, chunk), p in zip(pipes, procs):
        try:
            payload = conn.recv()
        except EOFError:
            payload = ("err", f"worker died (exit {p.exitcode})")
        conn.close()
        p.join()
        kind, value = payload
        if kind == "err":
            failure = failure or RuntimeError(value)
        else:
            for i, res in zip(chunk, value):
                results[i] = res
    if failure is not None:
        raise failure
    return results


def _worker(fn, args, chunk, conn):
    try:
        out = [fn(args[i]) for i in chunk]
        conn.send(("ok", out))
    except Exception as exc:  # transported to the parent
        conn.send(("err", f"{type(exc).__name__}: {exc}"))
    finally:
        conn.close()
