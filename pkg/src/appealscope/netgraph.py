"""Per-period all-communication networks and total degree centrality."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple
from xml.sax.saxutils import escape, quoteattr

from .corpus import Tweet

RETWEET = "retweet"
MENTION = "mention"


class GraphError(ValueError):
    pass


class Degree(NamedTuple):
    in_count: int
    out_count: int
    total: int


class Edge(NamedTuple):
    source: str
    target: str
    kind: str


@dataclass
class CommNetwork:
    period: str
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    degrees: dict[str, Degree]
    mean_retweet_count: dict[str, float] = field(default_factory=dict)
    dropped_nonauthor: int = 0
    dropped_self: int = 0

    def __len__(self):
        return len(self.nodes)


def build_network(tweets: Iterable[Tweet], period: str, period_of=None) -> CommNetwork:
    """Directed interaction multigraph over the authors of ``tweets``.

    Each retweet adds ``author -> retweeted author``; each mention adds
    ``author -> mentioned user``. Targets that authored nothing in the
    period and self-interactions are dropped and tallied. Parallel edges
    are kept. ``period_of``, when given, maps a tweet to its period label
    and is used to reject tweets from other periods.
    """
    tweets = list(tweets)
    if period_of is not None:
        for t in tweets:
            if period_of(t) != period:
                raise GraphError(f"tweet {t.tweet_id} does not belong to period {period!r}")
    authors = {t.author_id for t in tweets}
    edges: list[Edge] = []
    dropped_nonauthor = dropped_self = 0
    rt_sum: dict[str, int] = defaultdict(int)
    rt_n: dict[str, int] = defaultdict(int)
    for t in tweets:
        rt_sum[t.author_id] += t.retweet_count
        rt_n[t.author_id] += 1
        targets = []
        if t.is_retweet:
            targets.append((t.retweeted_author_id, RETWEET))
        targets.extend((m, MENTION) for m in t.mentioned_author_ids)
        for target, kind in targets:
            if target == t.author_id:
                dropped_self += 1
            elif target not in authors:
                dropped_nonauthor += 1
            else:
                edges.append(Edge(t.author_id, target, kind))
    edges.sort()
    in_c = Counter(e.target for e in edges)
    out_c = Counter(e.source for e in edges)
    nodes = tuple(sorted(authors))
    degrees = {u: Degree(in_c[u], out_c[u], in_c[u] + out_c[u]) for u in nodes}
    mean_rt = {u: rt_sum[u] / rt_n[u] for u in nodes}
    return CommNetwork(
        period=period,
        nodes=nodes,
        edges=tuple(edges),
        degrees=degrees,
        mean_retweet_count=mean_rt,
        dropped_nonauthor=dropped_nonauthor,
        dropped_self=dropped_self,
    )


def total_degree(network: CommNetwork, user_id: str) -> int:
    try:
        return network.degrees[user_id].total
    except KeyError:
        raise KeyError(f"user {user_id!r} is not a node of the {network.period!r} network") from None


# --------------------------------------------------------------------------
# export

FORMATS = ("dot", "gexf")


def _num(x: float) -> str:
    return format(x, ".10g")


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _export_dot(net: CommNetwork, bots: Mapping[str, bool]) -> str:
    lines = [f"digraph {_dot_id(net.period)} {{"]
    for u in net.nodes:
        lines.append(
            f"  {_dot_id(u)} [is_bot={int(bool(bots.get(u, False)))}, "
            f"mean_retweet_count={_num(net.mean_retweet_count.get(u, 0.0))}, "
            f"total_degree={net.degrees[u].total}];"
        )
    for e in net.edges:
        lines.append(f"  {_dot_id(e.source)} -> {_dot_id(e.target)} [kind={e.kind}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _export_gexf(net: CommNetwork, bots: Mapping[str, bool]) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://gexf.net/1.3" version="1.3">',
        '  <graph mode="static" defaultedgetype="directed">',
        '    <attributes class="node">',
        '      <attribute id="0" title="is_bot" type="integer"/>',
        '      <attribute id="1" title="mean_retweet_count" type="double"/>',
        '      <attribute id="2" title="total_degree" type="integer"/>',
        "    </attributes>",
        '    <attributes class="edge">',
        '      <attribute id="0" title="kind" type="string"/>',
        "    </attributes>",
        "    <nodes>",
    ]
    for u in net.nodes:
        out.append(f"      <node id={quoteattr(u)} label={quoteattr(u)}>")
        out.append("        <attvalues>")
        out.append(f'          <attvalue for="0" value="{int(bool(bots.get(u, False)))}"/>')
        out.append(f'          <attvalue for="1" value="{_num(net.mean_retweet_count.get(u, 0.0))}"/>')
        out.append(f'          <attvalue for="2" value="{net.degrees[u].total}"/>')
        out.append("        </attvalues>")
        out.append("      </node>")
    out.append("    </nodes>")
    out.append("    <edges>")
    for i, e in enumerate(net.edges):
        out.append(
            f'      <edge id="{i}" source={quoteattr(e.source)} target={quoteattr(e.target)}>'
            f'<attvalues><attvalue for="0" value="{escape(e.kind)}"/></attvalues></edge>'
        )
    out.append("    </edges>")
    out.append("  </graph>")
    out.append("</gexf>")
    return "\n".join(out) + "\n"


def export_network(net: CommNetwork, fmt: str, bots: Mapping[str, bool] | None = None) -> bytes:
    """Serialise ``net`` as Graphviz DOT or GEXF 1.3; output is deterministic."""
    bots = bots or {}
    if fmt == "dot":
        return _export_dot(net, bots).encode("utf-8")
    if fmt == "gexf":
        return _export_gexf(net, bots).encode("utf-8")
    raise GraphError(f"unsupported export format {fmt!r}; choose one of {', '.join(FORMATS)}")


DEGREES_HEADER = ["period", "user_id", "in_count", "out_count", "total_degree"]
