import random

import pytest

from lexforge.ratelimit import (
    RateLimitPolicy,
    SimulatedClock,
    SlidingWindowRateLimiter,
)


def assert_window_compliant(times, max_requests, window):
    """No window of `window` seconds may contain more than max_requests calls."""
    ordered = sorted(times)
    for i in range(len(ordered) - max_requests):
        assert ordered[i + max_requests] - ordered[i] >= window - 1e-9, (
            f"calls {i} and {i + max_requests} are {ordered[i + max_requests] - ordered[i]:.3f}s apart"
        )


def test_policy_defaults_match_budget():
    policy = RateLimitPolicy()
    assert policy.max_requests == 15
    assert policy.window_seconds == 60.0
    assert policy.max_retries == 3
    assert policy.backoff_base_seconds == 2.0


def test_policy_validation():
    with pytest.raises(ValueError):
        RateLimitPolicy(max_requests=0)
    with pytest.raises(ValueError):
        RateLimitPolicy(window_seconds=0)


def test_backoff_doubles():
    policy = RateLimitPolicy()
    assert [policy.backoff_delay(i) for i in range(3)] == [2.0, 4.0, 8.0]


def test_burst_within_budget_never_waits():
    clock = SimulatedClock()
    limiter = SlidingWindowRateLimiter(15, 60.0, clock)
    for _ in range(15):
        limiter.acquire()
    assert clock.now() == 0.0


def test_sixteenth_call_waits_full_window():
    clock = SimulatedClock()
    limiter = SlidingWindowRateLimiter(15, 60.0, clock)
    times = [limiter.acquire() for _ in range(16)]
    assert times[15] >= times[0] + 60.0
    assert clock.now() >= 60.0


def test_sliding_window_holds_under_random_gaps():
    rng = random.Random(3)
    clock = SimulatedClock()
    limiter = SlidingWindowRateLimiter(15, 60.0, clock)
    for _ in range(200):
        limiter.acquire()
        clock.sleep(rng.uniform(0.0, 6.0))
    assert_window_compliant(limiter.issued_at, 15, 60.0)


def test_window_reopens_after_expiry():
    clock = SimulatedClock()
    limiter = SlidingWindowRateLimiter(2, 10.0, clock)
    limiter.acquire()
    limiter.acquire()
    clock.sleep(10.0)
    t = limiter.acquire()
    assert t == pytest.approx(10.0)
