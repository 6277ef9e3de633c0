"""Knowledge graph: entity nodes with context snippets, labeled edges.

Nodes merge on the normalized entity name; every node keeps the text of the
chunks its triples came from, so a traversal can hand back both structure
and supporting context. Traversal is a seeded breadth-first expansion over
edges in both directions, bounded by hop count and node budget. Same
lifecycle as the vector store: single-writer build, seal, then lock-free
concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .extraction import EntityMention, Triple, normalize_entity
from .exceptions import InputError, StoreCorruptError

MIN_PREFIX_LEN = 3
DEFAULT_HOPS = 2
DEFAULT_MAX_NODES = 50


@dataclass
class EntityNode:
    node_id: int
    name: str  # canonical = first surface seen
    normalized: str
    contexts: list[tuple[str, str]] = field(default_factory=list)  # (chunk_id, snippet)


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    relation: str
    provenance: str


@dataclass
class Subgraph:
    nodes: dict[int, EntityNode]
    edges: set[Edge]
    seed_ids: set[int]
    hop_of: dict[int, int]

    def __bool__(self) -> bool:
        return bool(self.nodes)


class KnowledgeGraph:
    def __init__(self) -> None:
        self._nodes: list[EntityNode] = []
        self._by_normalized: dict[str, int] = {}
        self._edges: set[Edge] = set()
        self._adjacency: dict[int, set[int]] = {}
        self._sealed = False

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def sealed(self) -> bool:
        return self._sealed

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def node(self, node_id: int) -> EntityNode:
        return self._nodes[node_id]

    def node_names(self) -> set[str]:
        return {n.name for n in self._nodes}

    def seal(self) -> None:
        self._sealed = True

    def _resolve(self, surface: str) -> int:
        normalized = normalize_entity(surface)
        node_id = self._by_normalized.get(normalized)
        if node_id is None:
            node_id = len(self._nodes)
            self._nodes.append(EntityNode(node_id=node_id, name=surface, normalized=normalized))
            self._by_normalized[normalized] = node_id
            self._adjacency[node_id] = set()
        return node_id

    def upsert_triple(self, triple: Triple, context_snippet: str) -> tuple[int, int]:
        """Merge a triple into the graph; returns (source, target) node ids.

        Endpoint nodes are resolved or created by normalized name; the edge
        and the context snippet are deduplicated (snippets by chunk id).
        """
        if self._sealed:
            raise ValueError("graph is sealed; upserts are only allowed during build")
        if not triple.subject.strip() or not triple.object.strip():
            raise ValueError(f"triple with empty endpoint rejected: {triple}")
        if not triple.relation.strip():
            raise ValueError(f"triple with empty relation rejected: {triple}")
        source = self._resolve(triple.subject)
        target = self._resolve(triple.object)
        edge = Edge(source=source, target=target, relation=triple.relation, provenance=triple.provenance)
        if edge not in self._edges:
            self._edges.add(edge)
            self._adjacency[source].add(target)
            self._adjacency[target].add(source)
        for node_id in (source, target):
            node = self._nodes[node_id]
            if all(cid != triple.provenance for cid, _ in node.contexts):
                node.contexts.append((triple.provenance, context_snippet))
        return source, target

    def match_entities(self, mentions: list[EntityMention]) -> set[int]:
        """Resolve mentions to node ids: exact normalized match, then unique prefix.

        A prefix match requires one string to be a prefix of the other with
        the shorter side at least MIN_PREFIX_LEN characters; an ambiguous
        prefix (several candidate nodes) matches nothing.
        """
        if not self._sealed:
            raise ValueError("graph must be sealed before matching")
        matched: set[int] = set()
        for mention in mentions:
            m = mention.normalized
            node_id = self._by_normalized.get(m)
            if node_id is not None:
                matched.add(node_id)
                continue
            candidates = [
                nid
                for norm, nid in self._by_normalized.items()
                if (len(m) >= MIN_PREFIX_LEN and norm.startswith(m))
                or (len(norm) >= MIN_PREFIX_LEN and m.startswith(norm))
            ]
            if len(candidates) == 1:
                matched.add(candidates[0])
        return matched

    def neighborhood(self, seeds: set[int], hops: int = DEFAULT_HOPS, max_nodes: int = DEFAULT_MAX_NODES) -> Subgraph:
        """Breadth-first expansion from the seeds, both edge directions.

        Frontiers are admitted depth by depth; when the node budget truncates
        a frontier, lower node ids win. Edges are the graph edges induced on
        the admitted node set.
        """
        if not self._sealed:
            raise ValueError("graph must be sealed before traversal")
        if hops < 1:
            raise ValueError("hops must be >= 1")
        if not seeds:
            return Subgraph(nodes={}, edges=set(), seed_ids=set(), hop_of={})

        hop_of: dict[int, int] = {seed: 0 for seed in sorted(seeds)}
        frontier = sorted(seeds)
        for depth in range(1, hops + 1):
            if len(hop_of) >= max_nodes:
                break
            next_frontier = sorted(
                {n for node in frontier for n in self._adjacency.get(node, ()) if n not in hop_of}
            )
            if not next_frontier:
                break
            admitted = []
            for node in next_frontier:
                if len(hop_of) >= max_nodes:
                    break
                hop_of[node] = depth
                admitted.append(node)
            frontier = admitted

        nodes = {nid: self._nodes[nid] for nid in hop_of}
        edges = {e for e in self._edges if e.source in hop_of and e.target in hop_of}
        return Subgraph(nodes=nodes, edges=edges, seed_ids=set(seeds), hop_of=hop_of)

    # -- rendering and export ------------------------------------------------

    def render_subgraph(self, sub: Subgraph) -> str:
        """Deterministic text form: edge lines, then deduplicated contexts."""
        if not sub.nodes:
            return ""
        edge_lines = sorted(
            (sub.hop_of[e.source], sub.nodes[e.source].name, e.relation, sub.nodes[e.target].name)
            for e in sub.edges
        )
        lines = [f"{source} -[{relation}]-> {target}" for _, source, relation, target in edge_lines]

        snippets: list[tuple[str, str, str]] = []
        for node in sub.nodes.values():
            for chunk_id, snippet in node.contexts:
                snippets.append((node.name, chunk_id, snippet))
        seen_chunks: set[str] = set()
        context_lines = []
        for _, chunk_id, snippet in sorted(snippets, key=lambda t: (t[0], t[1])):
            if chunk_id in seen_chunks:
                continue
            seen_chunks.add(chunk_id)
            context_lines.append(f"- {snippet}")
        if context_lines:
            if lines:
                lines.append("")
            lines.append("Contexts:")
            lines.extend(context_lines)
        return "\n".join(lines)

    def to_json_obj(self) -> dict:
        return {
            "nodes": [
                {"id": n.node_id, "name": n.name, "contexts": [cid for cid, _ in n.contexts]}
                for n in self._nodes
            ],
            "edges": [
                {"source": e.source, "target": e.target, "relation": e.relation, "provenance": e.provenance}
                for e in sorted(self._edges, key=lambda e: (e.source, e.target, e.relation, e.provenance))
            ],
        }

    def to_dot(self) -> str:
        def esc(text: str) -> str:
            return text.replace("\\", "\\\\").replace('"', '\\"')

        lines = ["digraph knowledge_graph {"]
        for node in self._nodes:
            lines.append(f'  n{node.node_id} [label="{esc(node.name)}"];')
        for e in sorted(self._edges, key=lambda e: (e.source, e.target, e.relation, e.provenance)):
            lines.append(f'  n{e.source} -> n{e.target} [label="{esc(e.relation)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def export(self, path: str | Path, fmt: str = "json") -> None:
        if not self._sealed:
            raise ValueError("seal the graph before exporting")
        path = Path(path)
        if fmt == "json":
            payload = json.dumps(self.to_json_obj(), ensure_ascii=False, indent=2) + "\n"
        elif fmt == "dot":
            payload = self.to_dot()
        else:
            raise ValueError(f"unknown export format {fmt!r}")
        try:
            path.write_text(payload, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write graph export to {path}: {exc}") from exc

    @classmethod
    def from_json_obj(cls, obj: dict, chunk_texts: dict[str, str] | None = None) -> "KnowledgeGraph":
        """Rebuild a sealed graph from the JSON export.

        The export stores context chunk ids only; pass ``chunk_texts`` to
        rehydrate snippet text (chunk_id -> full chunk text).
        """
        texts = chunk_texts or {}
        graph = cls()
        try:
            for item in sorted(obj["nodes"], key=lambda n: n["id"]):
                node_id = graph._resolve(item["name"])
                if node_id != item["id"]:
                    raise StoreCorruptError(f"non-contiguous node ids in graph export: {item['id']}")
                graph._nodes[node_id].contexts = [
                    (cid, texts.get(cid, "")) for cid in item["contexts"]
                ]
            for item in obj["edges"]:
                edge = Edge(
                    source=item["source"],
                    target=item["target"],
                    relation=item["relation"],
                    provenance=item["provenance"],
                )
                if edge.source >= len(graph._nodes) or edge.target >= len(graph._nodes):
                    raise StoreCorruptError(f"edge endpoint out of range: {item}")
                graph._edges.add(edge)
                graph._adjacency[edge.source].add(edge.target)
                graph._adjacency[edge.target].add(edge.source)
        except (KeyError, TypeError) as exc:
            raise StoreCorruptError(f"malformed graph export: {exc}") from exc
        graph.seal()
        return graph

    @classmethod
    def load_json(cls, path: str | Path, chunk_texts: dict[str, str] | None = None) -> "KnowledgeGraph":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreCorruptError(f"cannot load graph from {path}: {exc}") from exc
        return cls.from_json_obj(obj, chunk_texts)
