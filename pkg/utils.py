import logging
import math
import os
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from joblib import Parallel, cpu_count, delayed

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

WORKERS_ENV = "ETF_WORKERS"


def is_prime(n: int) -> bool:
    """
    Deterministic primality by trial division (inputs here stay small).
    """
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for f in range(3, math.isqrt(n) + 1, 2):
        if n % f == 0:
            return False
    return True


def require_odd_prime(p: int) -> None:
    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"p must be an odd prime, got {p}")


def odd_primes_up_to(bound: int) -> List[int]:
    """
    All odd primes p <= bound, ascending.
    """
    return [p for p in range(3, bound + 1, 2) if is_prime(p)]


def odd_prime_divisors(n: int) -> List[int]:
    """
    Odd prime divisors of a nonzero integer, ascending.

    Parameters
    ----------
    n : int
        Nonzero integer (sign ignored).

    Returns
    -------
    List[int]
        The distinct odd primes dividing n.
    """
    n = abs(n)
    if n == 0:
        raise ValueError("odd_prime_divisors needs a nonzero integer")
    while n % 2 == 0:
        n //= 2
    out = []
    f = 3
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 2
    if n > 1:
        out.append(n)
    return out


def p_adic_valuation(n: int, p: int) -> int:
    """
    Largest m with p^m | n; n must be nonzero.
    """
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    n = abs(n)
    m = 0
    while n % p == 0:
        n //= p
        m += 1
    return m


def is_perfect_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def resolve_workers(flag: Optional[int] = None) -> int:
    """
    Worker count: explicit flag, then the ETF_WORKERS environment
    variable, then the available parallelism.
    """
    if flag is not None:
        if flag < 1:
            raise ValueError(f"--workers must be at least 1, got {flag}")
        return flag
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}")
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be at least 1, got {value}")
        return value
    return max(1, cpu_count())


def parallel_map(func: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """
    Order-preserving map, fanned out over joblib workers when workers > 1.
    """
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug("dispatching %d jobs to %d workers", len(items), workers)
    return list(Parallel(n_jobs=workers)(delayed(func)(item) for item in items))


def format_params(values: Iterable[object]) -> str:
    """
    Render a parameter tuple as "(a,b,c)".
    """
    return "(" + ",".join(str(v) for v in values) + ")"
