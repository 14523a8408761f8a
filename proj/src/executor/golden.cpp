#include "grraf/golden.hpp"

#include "grraf/errors.hpp"

namespace grraf {

namespace {

constexpr const char* kCycle = R"(n = node_count();
if is_directed() {
    color = [];
    for v in range(n) { color.append(0); }
    for s in range(n) {
        if color[s] != 0 { continue; }
        color[s] = 1;
        stack = [[s, 0]];
        while len(stack) > 0 {
            top = stack[-1];
            v = top[0];
            succ = successors(v);
            i = top[1];
            if i < len(succ) {
                top[1] = i + 1;
                w = succ[i];
                if color[w] == 1 { return true; }
                if color[w] == 0 {
                    color[w] = 1;
                    stack.append([w, 0]);
                }
            } else {
                color[v] = 2;
                stack.pop();
            }
        }
    }
    return false;
}
# undirected: union-find, self-loops ignored
parent = list(range(n));
for e in edges() {
    a = e[0];
    b = e[1];
    if a == b { continue; }
    while parent[a] != a { parent[a] = parent[parent[a]]; a = parent[a]; }
    while parent[b] != b { parent[b] = parent[parent[b]]; b = parent[b]; }
    if a == b { return true; }
    parent[a] = b;
}
return false;
)";

constexpr const char* kConnectivity = R"(if source == target { return true; }
seen = set([source]);
queue = [source];
while len(queue) > 0 {
    v = queue.popleft();
    for w in successors(v) {
        if w == target { return true; }
        if not (w in seen) {
            seen.add(w);
            queue.append(w);
        }
    }
}
return false;
)";

constexpr const char* kBipartite = R"(n = node_count();
color = [];
for v in range(n) { color.append(-1); }
for s in range(n) {
    if color[s] != -1 { continue; }
    color[s] = 0;
    queue = [s];
    while len(queue) > 0 {
        v = queue.popleft();
        adj = successors(v);
        if is_directed() { adj = adj + predecessors(v); }
        for w in adj {
            if color[w] == -1 {
                color[w] = 1 - color[v];
                queue.append(w);
            } else if color[w] == color[v] {
                return false;
            }
        }
    }
}
return true;
)";

constexpr const char* kTopological = R"(n = node_count();
indeg = [];
ready = heap();
for v in range(n) {
    indeg.append(indegree(v));
    if indeg[v] == 0 { ready.push(v); }
}
order = [];
while len(ready) > 0 {
    v = ready.pop()[1];
    order.append(v);
    for w in successors(v) {
        indeg[w] -= 1;
        if indeg[w] == 0 { ready.push(w); }
    }
}
if len(order) < n { return none; }
return order;
)";

constexpr const char* kShortestPath = R"(dist = {source: 0};
prev = map();
done = set();
frontier = heap();
frontier.push(0, source);
while len(frontier) > 0 {
    top = frontier.pop();
    d = top[0];
    v = top[1];
    if v in done { continue; }
    done.add(v);
    if v == target { break; }
    for w in successors(v) {
        nd = d + edge_weight(v, w);
        if not dist.has(w) or nd < dist[w] {
            dist[w] = nd;
            prev[w] = v;
            frontier.push(nd, w);
        }
    }
}
if not (target in done) { return none; }
path = [target];
v = target;
while v != source {
    v = prev[v];
    path.appendleft(v);
}
return [path, dist[target]];
)";

constexpr const char* kTriangle = R"(n = node_count();
adj = [];
for v in range(n) { adj.append(set()); }
for e in edges() {
    if e[0] != e[1] {
        adj[e[0]].add(e[1]);
        adj[e[1]].add(e[0]);
    }
}
best = none;
for a in range(n) {
    for b in adj[a] {
        if b <= a { continue; }
        for c in adj[b] {
            if c > b and adj[a].has(c) {
                s = node_weight(a) + node_weight(b) + node_weight(c);
                if best == none or s > best { best = s; }
            }
        }
    }
}
return best;
)";

// Edmonds-Karp on a residual map keyed by u * n + v.
constexpr const char* kMaxFlow = R"(n = node_count();
cap = map();
adj = [];
for v in range(n) { adj.append(set()); }
for e in edges() {
    u = e[0];
    v = e[1];
    if u == v { continue; }
    cap[u * n + v] = cap.get(u * n + v, 0) + edge_capacity(u, v);
    if not cap.has(v * n + u) { cap[v * n + u] = 0; }
    adj[u].add(v);
    adj[v].add(u);
}
flow = 0;
while true {
    prev = {source: source};
    queue = [source];
    while len(queue) > 0 and not prev.has(target) {
        v = queue.popleft();
        for w in adj[v] {
            if not prev.has(w) and cap[v * n + w] > 0 {
                prev[w] = v;
                queue.append(w);
            }
        }
    }
    if not prev.has(target) { return flow; }
    push = none;
    v = target;
    while v != source {
        u = prev[v];
        if push == none or cap[u * n + v] < push { push = cap[u * n + v]; }
        v = u;
    }
    v = target;
    while v != source {
        u = prev[v];
        cap[u * n + v] -= push;
        cap[v * n + u] += push;
        v = u;
    }
    flow += push;
}
)";

// Non-induced matching by iterative backtracking. Pattern nodes are placed in
// an order that keeps each new node attached to already-placed ones, and every
// pattern edge is checked at the depth where its second endpoint is placed.
constexpr const char* kSubgraph = R"(pn = pattern_nodes;
n = node_count();
if pn > n { return false; }
if pn == 0 { return true; }
padj = [];
for p in range(pn) { padj.append(set()); }
for e in pattern_edges {
    padj[e[0]].add(e[1]);
    padj[e[1]].add(e[0]);
}
order = [];
placed = set();
while len(order) < pn {
    best = -1;
    best_links = -1;
    for p in range(pn) {
        if placed.has(p) { continue; }
        links = 0;
        for q in padj[p] { if placed.has(q) { links += 1; } }
        if links > best_links or (links == best_links and len(padj[p]) > len(padj[best])) {
            best = p;
            best_links = links;
        }
    }
    order.append(best);
    placed.add(best);
}
pos = [];
for p in range(pn) { pos.append(0); }
for i in range(pn) { pos[order[i]] = i; }
checks = [];
for i in range(pn) { checks.append([]); }
for e in pattern_edges { checks[max(pos[e[0]], pos[e[1]])].append(e); }
mapping = [];
next_candidate = [];
for i in range(pn) {
    mapping.append(-1);
    next_candidate.append(0);
}
used = set();
depth = 0;
while depth >= 0 {
    p = order[depth];
    if mapping[p] != -1 {
        used.discard(mapping[p]);
        mapping[p] = -1;
    }
    found = false;
    while next_candidate[depth] < n {
        c = next_candidate[depth];
        next_candidate[depth] += 1;
        if used.has(c) { continue; }
        mapping[p] = c;
        ok = true;
        for e in checks[depth] {
            if not has_edge(mapping[e[0]], mapping[e[1]]) {
                ok = false;
                break;
            }
        }
        if ok {
            found = true;
            break;
        }
        mapping[p] = -1;
    }
    if found {
        used.add(mapping[p]);
        if depth == pn - 1 { return true; }
        depth += 1;
        next_candidate[depth] = 0;
    } else {
        next_candidate[depth] = 0;
        depth -= 1;
    }
}
return false;
)";

constexpr const char* kIndegree = "return indegree(query_node);\n";
constexpr const char* kOutdegree = "return outdegree(query_node);\n";

std::string bind(const char* name, const std::optional<NodeId>& value, TaskKind task) {
    if (!value)
        throw ContractError(std::string(task_name(task)) + " question is missing parameter '" + name + "'");
    return std::string(name) + " = " + std::to_string(*value) + ";\n";
}

}  // namespace

std::string golden_template(TaskKind task) {
    switch (task) {
        case TaskKind::cycle_detection: return kCycle;
        case TaskKind::connectivity: return kConnectivity;
        case TaskKind::bipartite_check: return kBipartite;
        case TaskKind::topological_sort: return kTopological;
        case TaskKind::shortest_path: return kShortestPath;
        case TaskKind::max_triangle_sum: return kTriangle;
        case TaskKind::max_flow: return kMaxFlow;
        case TaskKind::subgraph_matching: return kSubgraph;
        case TaskKind::indegree: return kIndegree;
        case TaskKind::outdegree: return kOutdegree;
    }
    return {};
}

std::string golden_program(TaskKind task, const QuestionParams& params) {
    std::string prelude;
    switch (task) {
        case TaskKind::connectivity:
        case TaskKind::shortest_path:
        case TaskKind::max_flow:
            prelude = bind("source", params.source, task) + bind("target", params.target, task);
            break;
        case TaskKind::indegree:
        case TaskKind::outdegree: prelude = bind("query_node", params.node, task); break;
        case TaskKind::subgraph_matching: {
            if (!params.pattern) throw ContractError("subgraph_matching question is missing its pattern");
            prelude = "pattern_nodes = " + std::to_string(params.pattern->node_count()) + ";\npattern_edges = [";
            bool first = true;
            for (const auto& e : params.pattern->edges()) {
                if (!first) prelude += ", ";
                first = false;
                prelude += "[" + std::to_string(e.u) + ", " + std::to_string(e.v) + "]";
            }
            prelude += "];\n";
            break;
        }
        default: break;
    }
    return prelude + golden_template(task);
}

std::string with_busy_loop(const std::string& code, std::int64_t iterations) {
    return "busy = 0;\nfor busy_i in range(" + std::to_string(iterations) + ") { busy += 1; }\n" + code;
}

}  // namespace grraf
