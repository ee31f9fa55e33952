"""
Play one episode against a running server
=========================================

Start a server first::

    minihok serve --mode B --endpoint 127.0.0.1:5555

then run ``python demos/client.py --endpoint 127.0.0.1:5555 --mode B``.
"""

import argparse
import sys

from minihok.protocol import DEFAULT_ENDPOINT, ProtocolError, client_session, random_client_policy, rule_client_policy
from minihok.scenario import builtin_mode

parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
parser.add_argument("--endpoint", default=DEFAULT_ENDPOINT)
parser.add_argument("--mode", default="A")
parser.add_argument("--policy", choices=["rule", "random"], default="rule")
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

# the server checks both the hero list and the scenario hash
scenario = builtin_mode(args.mode)
heroes = scenario.hero_ids
policy = rule_client_policy(scenario.normalize_obs) if args.policy == "rule" else random_client_policy(args.seed)

try:
    summary = client_session(args.endpoint, policy, heroes, seed=args.seed,
                             scenario_ref=scenario.config_hash())
except (ProtocolError, OSError) as exc:
    print(f"client failed: {exc}", file=sys.stderr)
    sys.exit(2)

print(f"episode {summary.episode_id}")
print(f"steps {summary.steps}  damage {summary.total_damage}  reward {summary.total_reward:.2f}")
print(f"server replay: {summary.server_summary['replay']}")
