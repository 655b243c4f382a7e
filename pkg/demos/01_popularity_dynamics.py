#!/usr/bin/env python3
"""Popularity profiles, their Markov dynamics, and empirical estimation.

Builds the reference two-state global/local chains over a 10-file catalog,
steps them for a while, then shows how a finite request batch is turned back
into a profile estimate and quantized onto the chain's state set.
"""

import numpy as np

import cache_rl as cr

g_chain, l_chain = cr.small_network_chains()
rng = np.random.default_rng(7)

print("=== catalog and chain setup ===")
print(f"catalog size F = {g_chain.catalog_size}")
print(f"global chain: {g_chain.n_states} states, transition matrix:\n{g_chain.transition}")
print(f"local chain:  {l_chain.n_states} states, transition matrix:\n{l_chain.transition}")
for i, state in enumerate(g_chain.states):
    top = np.argsort(-state.probs)[:3] + 1
    print(f"global state {i}: top files {top.tolist()}, masses {np.round(np.sort(state.probs)[::-1][:3], 3).tolist()}")

print("\n=== stepping the local chain for 20 slots ===")
l = 0
path = [l]
for _ in range(20):
    l = cr.step_chain(l_chain, l, rng)
    path.append(l)
print("state path:", path)
print("(state 1 is stickier: its self-transition probability is 0.8)")

print("\n=== empirical estimation from a finite request batch ===")
true_state = 1
profile = l_chain.states[true_state]
for n_requests in (20, 200, 20_000):
    batch = cr.sample_requests(profile, n_requests, rng)
    estimate = cr.estimate_empirical(batch)
    tv = cr.total_variation(estimate.probs, profile.probs)
    recovered = cr.quantize_to_state(estimate, l_chain)
    print(
        f"{n_requests:>6} requests: TV distance to truth {tv:.3f}, "
        f"quantized to state {recovered} (truth {true_state})"
    )

print("\n=== chains serialize to plain JSON ===")
doc = g_chain.to_json()
print(f"document length {len(doc)} chars; round-trip equal:",
      np.allclose(cr.MarkovChain.from_json(doc).transition, g_chain.transition))
