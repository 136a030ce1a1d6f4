#include "ledgerscope/service.hpp"
#include "ledgerscope/timefmt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <random>

namespace ledgerscope {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::vector<EntityTx> entity_transactions(const Corpus& corpus, EntityId entity, TxRole role, const TimeRange& range) {
    if (entity >= corpus.index.entity_count()) throw NotFound("unknown entity " + std::to_string(entity));
    require_valid(range);
    const Role wanted = role == TxRole::sender ? Role::input : Role::output;
    const auto [lo, hi] = corpus.store.tx_span(range);
    std::vector<TxIndex> txs;
    for (auto a : corpus.index.members(entity))
        for (const auto& p : corpus.store.postings(a))
            if (p.role == wanted && p.tx >= lo && p.tx < hi) txs.push_back(p.tx);
    std::sort(txs.begin(), txs.end());
    txs.erase(std::unique(txs.begin(), txs.end()), txs.end());

    std::vector<EntityTx> out;
    out.reserve(txs.size());
    for (auto t : txs) {
        const auto& tx = corpus.store.tx(t);
        Satoshi amount = 0;
        for (const auto& s : role == TxRole::sender ? tx.inputs : tx.outputs)
            if (corpus.index.entity_of(s.address) == entity) amount += s.amount;
        out.push_back({tx.timestamp, amount, tx.tx_id});
    }
    return out;
}

struct Service::Session {
    struct ClusterEntry {
        std::shared_ptr<const ClusterResult> result;
        std::uint64_t revision = 0;
        std::uint64_t epoch = 0;
    };

    Session(std::string sid, std::shared_ptr<const Corpus> c, TimeRange r, std::shared_ptr<const MeasureTable> t)
        : id(std::move(sid)), corpus(std::move(c)), range(r), table(std::move(t)), tree(table->entities()) {}

    std::string id;
    std::shared_ptr<const Corpus> corpus;
    TimeRange range;
    std::shared_ptr<const MeasureTable> table;
    ClassificationTree tree;
    // Incremented whenever the range (and therefore every node set) changes.
    std::uint64_t epoch = 0;
    std::map<NodeId, ClusterEntry> clusters;
    std::string active_job;
    std::string created = format_iso8601(now_unix());
    std::atomic<Clock::rep> last_access{Clock::now().time_since_epoch().count()};
    std::shared_mutex mutex;

    void touch() { last_access = Clock::now().time_since_epoch().count(); }

    const ClusterEntry& fresh_cluster(NodeId node) const {
        auto it = clusters.find(node);
        if (it == clusters.end()) throw StateError("no cluster result for node " + std::to_string(node));
        if (it->second.epoch != epoch || it->second.revision != tree.revision(node))
            throw StateError("stale cluster result for node " + std::to_string(node) + "; re-run clustering");
        return it->second;
    }
};

struct Service::Job {
    std::string id;
    std::string session_id;
    NodeId node = 0;
    std::uint64_t seed = 0;
    std::mutex m;
    std::condition_variable cv;
    std::string status = "running";  // running | done | failed | cancelled
    std::string error;
    std::shared_ptr<const ClusterResult> result;
    std::jthread thread;
};

namespace {

json range_json(const TimeRange& r) {
    return json{{"from", r.from}, {"to", r.to}, {"from_iso", format_iso8601(r.from)}, {"to_iso", format_iso8601(r.to)}};
}

UnixSeconds time_field(const json& v, const char* name) {
    if (v.is_number_integer()) return v.get<UnixSeconds>();
    if (v.is_string()) return parse_time(v.get<std::string>());
    throw InvalidArgument(std::string("'") + name + "' must be unix seconds or an ISO-8601 string");
}

TimeRange default_range(const Corpus& c) {
    if (auto e = c.store.time_extent()) return *e;
    return {0, 1};
}

TimeRange range_from(const json& body, TimeRange fallback) {
    TimeRange r = fallback;
    if (body.is_object()) {
        if (body.contains("from") && !body["from"].is_null()) r.from = time_field(body["from"], "from");
        if (body.contains("to") && !body["to"].is_null()) r.to = time_field(body["to"], "to");
    }
    require_valid(r);
    return r;
}

json optional_number(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json tag_json(const std::optional<Tag>& t) {
    if (!t) return nullptr;
    return json{{"label", t->label}, {"category", std::string(to_string(t->category))}};
}

json node_json(const ClassificationTree& tree, NodeId id) {
    const auto& n = tree.node(id);
    json j{{"id", n.id},
           {"parent", n.parent ? json(*n.parent) : json(nullptr)},
           {"label", n.label},
           {"kind", std::string(to_string(n.kind))},
           {"count", n.count()},
           {"path", tree.path(id)},
           {"children", n.children ? json::array({n.children->first, n.children->second}) : json(nullptr)},
           {"provenance", n.cluster ? json("cluster") : n.predicate ? json("filter") : json(nullptr)}};
    if (n.predicate) j["predicate"] = to_json(*n.predicate);
    if (n.cluster) {
        j["cluster"] = to_json(n.cluster->request);
        j["cluster"]["index"] = n.cluster->cluster;
    }
    return j;
}

json tree_json(const ClassificationTree& tree) {
    json nodes = json::array();
    for (auto id : tree.node_ids()) nodes.push_back(node_json(tree, id));
    return json{{"root", tree.root()}, {"selected", tree.selected()}, {"nodes", std::move(nodes)}};
}

json measures_json(const ActivityMeasures& m) {
    json values = json::object();
    json btc = json::object();
    for (const auto& s : all_series()) {
        const auto v = measure_value(m, s);
        values[s.name()] = optional_number(v);
        if (is_amount_series(s.key) && v) btc[s.name()] = format_btc(static_cast<Satoshi>(std::llround(*v)));
    }
    return json{{"values", std::move(values)}, {"btc", std::move(btc)}};
}

json stats_json(const SeriesStats& s) {
    return json{{"defined", s.defined}, {"min", optional_number(s.min)}, {"mean", optional_number(s.mean)},
                {"max", optional_number(s.max)}};
}

json cluster_result_json(const ClusterResult& r, NodeId node) {
    json clusters = json::array();
    for (const auto& c : r.clusters) {
        json series = json::object();
        const auto keys = all_series();
        for (std::size_t s = 0; s < keys.size(); ++s) series[keys[s].name()] = stats_json(c.series[s]);
        json axes = json::array();
        for (std::size_t a = 0; a < kGlyphAxes; ++a)
            axes.push_back(json{{"axis", std::string(to_string(static_cast<GlyphAxis>(a)))},
                                {"position", optional_number(c.axes[a])},
                                {"stats", stats_json(c.axis_stats[a])}});
        clusters.push_back(json{{"id", c.id}, {"count", c.count}, {"series", std::move(series)}, {"axes", std::move(axes)}});
    }
    return json{{"node", node},
                {"request", to_json(r.request)},
                {"seed", r.request.seed},
                {"clusters", std::move(clusters)},
                {"included", r.entities.size()},
                {"excluded", r.excluded.size()},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"wcss", r.wcss}};
}

std::string random_token() {
    static std::mt19937_64 rng{std::random_device{}()};
    static std::mutex m;
    std::lock_guard lock(m);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

}  // namespace

Service::Service(ServiceConfig config) : config_(config) {}

Service::~Service() {
    std::map<std::string, std::shared_ptr<Job>> jobs;
    {
        std::lock_guard lock(mutex_);
        jobs = jobs_;
    }
    for (auto& [_, j] : jobs) j->thread.request_stop();
    for (auto& [_, j] : jobs)
        if (j->thread.joinable()) j->thread.join();
}

void Service::add_corpus(std::shared_ptr<const Corpus> corpus) {
    std::lock_guard lock(mutex_);
    corpora_[corpus->id] = std::move(corpus);
}

json Service::list_corpora() const {
    std::lock_guard lock(mutex_);
    json out = json::array();
    for (const auto& [id, c] : corpora_) {
        json j{{"corpus_id", id},
               {"transactions", c->store.tx_count()},
               {"addresses", c->store.address_count()},
               {"entities", c->index.entity_count()},
               {"tagged_entities", c->index.tagged_count()}};
        if (auto e = c->store.time_extent()) j["extent"] = range_json(*e);
        out.push_back(std::move(j));
    }
    return out;
}

std::shared_ptr<const Corpus> Service::corpus(const std::string& id) const {
    std::lock_guard lock(mutex_);
    if (id.empty()) {
        if (corpora_.size() == 1) return corpora_.begin()->second;
        throw InvalidArgument("corpus_id is required when more than one corpus is loaded");
    }
    auto it = corpora_.find(id);
    if (it == corpora_.end()) throw NotFound("unknown corpus " + id);
    return it->second;
}

std::shared_ptr<Service::Session> Service::session(const std::string& sid) {
    expire_idle();
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(sid);
    if (it == sessions_.end()) throw NotFound("unknown session " + sid);
    it->second->touch();
    return it->second;
}

std::size_t Service::expire_idle() {
    std::vector<std::shared_ptr<Job>> cancel;
    std::size_t dropped = 0;
    {
        std::lock_guard lock(mutex_);
        const auto now = Clock::now().time_since_epoch();
        const auto limit = std::chrono::duration_cast<Clock::duration>(config_.session_timeout).count();
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (now.count() - it->second->last_access.load() > limit) {
                for (auto& [_, j] : jobs_)
                    if (j->session_id == it->first) cancel.push_back(j);
                it = sessions_.erase(it);
                ++dropped;
            } else {
                ++it;
            }
        }
    }
    for (auto& j : cancel) j->thread.request_stop();
    return dropped;
}

std::size_t Service::session_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

json Service::create_session(const json& body) {
    if (!body.is_null() && !body.is_object()) throw InvalidArgument("session request must be a JSON object");
    const std::string corpus_id = body.is_object() ? body.value("corpus_id", std::string{}) : std::string{};
    auto c = corpus(corpus_id);
    const auto range = range_from(body, default_range(*c));
    auto table = std::make_shared<const MeasureTable>(compute_measures(c->source(), range));

    std::string sid;
    {
        std::lock_guard lock(mutex_);
        sid = "s" + std::to_string(next_session_++) + "-" + random_token();
    }
    auto s = std::make_shared<Session>(sid, c, range, std::move(table));
    json out{{"session_id", sid}, {"corpus_id", c->id}, {"range", range_json(range)},
             {"root", node_json(s->tree, s->tree.root())}};
    std::lock_guard lock(mutex_);
    sessions_.emplace(sid, std::move(s));
    return out;
}

json Service::session_info(const std::string& sid) {
    auto s = session(sid);
    std::shared_lock lock(s->mutex);
    return json{{"session_id", s->id},
                {"corpus_id", s->corpus->id},
                {"range", range_json(s->range)},
                {"created", s->created},
                {"selected", s->tree.selected()},
                {"nodes", s->tree.size()},
                {"active_job", s->active_job.empty() ? json(nullptr) : json(s->active_job)}};
}

void Service::delete_session(const std::string& sid) {
    std::vector<std::shared_ptr<Job>> cancel;
    {
        std::lock_guard lock(mutex_);
        if (!sessions_.erase(sid)) throw NotFound("unknown session " + sid);
        for (auto& [_, j] : jobs_)
            if (j->session_id == sid) cancel.push_back(j);
    }
    for (auto& j : cancel) j->thread.request_stop();
}

json Service::set_range(const std::string& sid, const json& body) {
    auto s = session(sid);
    std::unique_lock lock(s->mutex);
    const auto range = range_from(body, s->range);
    auto table = std::make_shared<const MeasureTable>(compute_measures(s->corpus->source(), range));
    const auto failed = s->tree.recompute(table->entities(), *table);
    s->range = range;
    s->table = std::move(table);
    ++s->epoch;
    s->clusters.clear();
    return json{{"range", range_json(range)}, {"tree", tree_json(s->tree)}, {"failed_cluster_nodes", failed}};
}

json Service::tree(const std::string& sid) {
    auto s = session(sid);
    std::shared_lock lock(s->mutex);
    return tree_json(s->tree);
}

json Service::split(const std::string& sid, NodeId node, const json& body) {
    if (!body.is_object() || !body.contains("predicate")) throw InvalidArgument("split needs a 'predicate'");
    const auto p = predicate_from_json(body["predicate"]);
    auto s = session(sid);
    std::unique_lock lock(s->mutex);
    const auto [m, r] = s->tree.split(node, p, *s->table, body.value("match_label", std::string("match")),
                                      body.value("remainder_label", std::string("remainder")));
    return json{{"match", node_json(s->tree, m)}, {"remainder", node_json(s->tree, r)}};
}

json Service::select(const std::string& sid, NodeId node) {
    auto s = session(sid);
    std::unique_lock lock(s->mutex);
    s->tree.select(node);
    return node_json(s->tree, node);
}

json Service::relabel(const std::string& sid, NodeId node, const json& body) {
    if (!body.is_object() || !body.contains("label") || !body["label"].is_string())
        throw InvalidArgument("relabel needs a string 'label'");
    auto s = session(sid);
    std::unique_lock lock(s->mutex);
    s->tree.relabel(node, body["label"].get<std::string>());
    return node_json(s->tree, node);
}

json Service::delete_split(const std::string& sid, NodeId node) {
    auto s = session(sid);
    std::unique_lock lock(s->mutex);
    s->tree.delete_split(node);
    for (auto it = s->clusters.begin(); it != s->clusters.end();)
        it = s->tree.contains(it->first) ? std::next(it) : s->clusters.erase(it);
    return tree_json(s->tree);
}

json Service::histogram(const std::string& sid, const HistogramQuery& q) {
    const auto series = make_series(q.key, q.variant);
    const auto scale = parse_scale(q.scale);
    if (!scale) throw InvalidArgument("unknown scale '" + q.scale + "'");
    auto s = session(sid);
    std::shared_lock lock(s->mutex);
    const NodeId node = q.node.value_or(s->tree.selected());
    const auto h = ledgerscope::histogram(*s->table, s->tree.node(node).entities, series, q.bins, *scale);
    return json{{"node", node},
                {"key", std::string(to_string(series.key))},
                {"variant", std::string(to_string(series.variant))},
                {"series", series.name()},
                {"scale", std::string(to_string(h.scale))},
                {"edges", h.edges},
                {"counts", h.counts},
                {"undefined", h.undefined},
                {"total", h.total()}};
}

json Service::volume(const std::string& sid, std::optional<NodeId> node, const std::string& bucket) {
    const auto b = parse_bucket(bucket);
    if (!b) throw InvalidArgument("unknown bucket '" + bucket + "'; use month or day");
    auto s = session(sid);
    std::shared_lock lock(s->mutex);
    const NodeId n = node.value_or(s->tree.selected());
    const auto points = tx_volume(s->corpus->store, s->corpus->index, s->tree.node(n).entities, s->range, *b);
    json arr = json::array();
    for (const auto& p : points)
        arr.push_back(json{{"bucket_start", p.bucket_start}, {"iso", format_iso8601(p.bucket_start)},
                           {"transactions", p.transactions}});
    return json{{"node", n}, {"bucket", std::string(to_string(*b))}, {"range", range_json(s->range)},
                {"points", std::move(arr)}};
}

json Service::start_cluster(const std::string& sid, const json& body) {
    const auto request = cluster_request_from_json(body);
    auto s = session(sid);

    std::unique_lock lock(s->mutex);
    const NodeId node = body.contains("node") && !body["node"].is_null() ? body["node"].get<NodeId>() : s->tree.selected();
    auto entities = s->tree.node(node).entities;
    auto table = s->table;
    const auto revision = s->tree.revision(node);
    const auto epoch = s->epoch;

    auto job = std::make_shared<Job>();
    job->session_id = sid;
    job->node = node;
    job->seed = request.seed;
    std::shared_ptr<Job> previous;
    {
        std::lock_guard g(mutex_);
        job->id = "j" + std::to_string(next_job_++);
        if (!s->active_job.empty()) previous = jobs_.count(s->active_job) ? jobs_[s->active_job] : nullptr;
        jobs_[job->id] = job;
    }
    if (previous) previous->thread.request_stop();
    s->active_job = job->id;

    std::weak_ptr<Session> weak = s;
    Job* raw = job.get();
    job->thread = std::jthread([raw, weak, table, entities = std::move(entities), request, node, revision,
                                epoch](std::stop_token stop) {
        std::shared_ptr<const ClusterResult> result;
        std::string status = "done", error;
        try {
            result = std::make_shared<const ClusterResult>(cluster(*table, entities, request, stop));
        } catch (const Cancelled&) {
            status = "cancelled";
        } catch (const std::exception& e) {
            status = "failed";
            error = e.what();
        }
        if (result) {
            if (auto sess = weak.lock()) {
                std::unique_lock lock(sess->mutex);
                // A result computed against an outdated node is kept on the job only.
                if (sess->epoch == epoch && sess->tree.contains(node) && sess->tree.revision(node) == revision)
                    sess->clusters[node] = Session::ClusterEntry{result, revision, epoch};
                if (sess->active_job == raw->id) sess->active_job.clear();
            }
        }
        std::lock_guard g(raw->m);
        raw->status = status;
        raw->error = error;
        raw->result = result;
        raw->cv.notify_all();
    });
    return json{{"job_id", job->id}, {"node", node}, {"status", "running"}, {"seed", request.seed}};
}

json Service::job(const std::string& job_id) {
    std::shared_ptr<Job> j;
    {
        std::lock_guard lock(mutex_);
        auto it = jobs_.find(job_id);
        if (it == jobs_.end()) throw NotFound("unknown job " + job_id);
        j = it->second;
    }
    std::lock_guard g(j->m);
    json out{{"job_id", j->id}, {"session_id", j->session_id}, {"node", j->node}, {"status", j->status},
             {"seed", j->seed}};
    if (!j->error.empty()) out["error"] = j->error;
    if (j->result) out["result"] = cluster_result_json(*j->result, j->node);
    return out;
}

json Service::cancel_job(const std::string& job_id) {
    std::shared_ptr<Job> j;
    {
        std::lock_guard lock(mutex_);
        auto it = jobs_.find(job_id);
        if (it == jobs_.end()) throw NotFound("unknown job " + job_id);
        j = it->second;
    }
    j->thread.request_stop();
    return json{{"job_id", job_id}, {"cancel_requested", true}};
}

json Service::wait_job(const std::string& job_id) {
    std::shared_ptr<Job> j;
    {
        std::lock_guard lock(mutex_);
        auto it = jobs_.find(job_id);
        if (it == jobs_.end()) throw NotFound("unknown job " + job_id);
        j = it->second;
    }
    {
        std::unique_lock g(j->m);
        j->cv.wait(g, [&] { return j->status != "running"; });
    }
    return job(job_id);
}

json Service::materialize_cluster(const std::string& sid, NodeId node, const json& body) {
    if (!body.is_object() || !body.contains("cluster") || !body["cluster"].is_number_unsigned())
        throw InvalidArgument("materialize needs a non-negative integer 'cluster'");
    const auto idx = body["cluster"].get<std::uint32_t>();
    auto s = session(sid);
    std::unique_lock lock(s->mutex);
    s->tree.node(node);
    const auto entry = s->fresh_cluster(node);
    const auto [m, r] = s->tree.split_cluster(node, *entry.result, idx,
                                              body.value("label", "cluster " + std::to_string(idx)),
                                              body.value("remainder_label", std::string("other clusters")));
    return json{{"match", node_json(s->tree, m)}, {"remainder", node_json(s->tree, r)}};
}

json Service::list_entities(const std::string& sid, const EntityQuery& q) {
    const auto series = make_series(q.sort, q.variant);
    const std::uint32_t page_size = q.page_size.value_or(config_.default_page_size);
    if (page_size == 0 || page_size > config_.max_page_size)
        throw InvalidArgument("page_size must be in [1, " + std::to_string(config_.max_page_size) + "]");

    auto s = session(sid);
    std::shared_lock lock(s->mutex);
    const NodeId node = q.node.value_or(s->tree.selected());
    const auto& node_entities = s->tree.node(node).entities;
    std::vector<EntityId> ids;
    if (q.cluster) {
        const auto& entry = s->fresh_cluster(node);
        if (*q.cluster >= entry.result->clusters.size()) throw NotFound("unknown cluster " + std::to_string(*q.cluster));
        ids = entry.result->members(*q.cluster);
    } else {
        ids = node_entities;
    }

    const auto& table = *s->table;
    std::vector<std::pair<std::optional<double>, EntityId>> keyed;
    keyed.reserve(ids.size());
    for (auto e : ids) {
        const auto* m = table.find(e);
        keyed.emplace_back(m ? measure_value(*m, series) : std::nullopt, e);
    }
    // Total order: defined values first by key, then entity id; undefined last.
    std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
        if (a.first.has_value() != b.first.has_value()) return a.first.has_value();
        if (a.first && *a.first != *b.first) return q.descending ? *a.first > *b.first : *a.first < *b.first;
        return a.second < b.second;
    });

    const auto ranges = AxisRanges::over(table, node_entities);
    const std::uint64_t total = keyed.size();
    const std::uint64_t begin = std::min<std::uint64_t>(total, std::uint64_t{q.page} * page_size);
    const std::uint64_t end = std::min<std::uint64_t>(total, begin + page_size);
    json cards = json::array();
    for (auto i = begin; i < end; ++i) {
        const EntityId e = keyed[i].second;
        json card{{"entity_id", e}, {"tag", tag_json(s->corpus->index.tag(e))},
                  {"addresses", s->corpus->index.members(e).size()}};
        json axes = json::array();
        if (const auto* m = table.find(e)) {
            card["measures"] = measures_json(*m);
            for (std::size_t a = 0; a < kGlyphAxes; ++a)
                axes.push_back(optional_number(ranges.normalize(static_cast<GlyphAxis>(a), glyph_value(*m, static_cast<GlyphAxis>(a)))));
        } else {
            card["measures"] = nullptr;
        }
        card["axes"] = std::move(axes);
        cards.push_back(std::move(card));
    }
    return json{{"node", node},
                {"cluster", q.cluster ? json(*q.cluster) : json(nullptr)},
                {"sort", series.name()},
                {"order", q.descending ? "desc" : "asc"},
                {"page", q.page},
                {"page_size", page_size},
                {"total", total},
                {"pages", (total + page_size - 1) / page_size},
                {"axis_order", {"num_txs", "time_first", "time_last", "time_active", "amount_rec", "amount_sent",
                                "num_inputs", "num_outputs"}},
                {"entities", std::move(cards)}};
}

json Service::entity_transactions(const std::string& sid, EntityId entity, const std::string& role,
                                  std::optional<TimeRange> range) {
    TxRole r;
    if (role == "sender") r = TxRole::sender;
    else if (role == "receiver") r = TxRole::receiver;
    else throw InvalidArgument("role must be 'sender' or 'receiver'");
    auto s = session(sid);
    std::shared_lock lock(s->mutex);
    const auto window = range.value_or(s->range);
    const auto txs = ledgerscope::entity_transactions(*s->corpus, entity, r, window);
    json arr = json::array();
    for (const auto& t : txs)
        arr.push_back(json{{"timestamp", t.timestamp}, {"iso", format_iso8601(t.timestamp)}, {"amount", t.amount},
                           {"btc", format_btc(t.amount)}, {"tx_id", t.tx_id}});
    return json{{"entity_id", entity}, {"role", role}, {"range", range_json(window)},
                {"tag", tag_json(s->corpus->index.tag(entity))}, {"transactions", std::move(arr)}};
}

json Service::export_document(const std::string& sid) {
    auto s = session(sid);
    std::shared_lock lock(s->mutex);
    return to_json(export_tree(s->tree, s->corpus->id, s->range, format_iso8601(now_unix())));
}

json Service::import_document(const std::string& sid, const json& body) {
    const auto doc = tree_document_from_json(body);
    auto s = session(sid);
    std::unique_lock lock(s->mutex);
    json warnings = json::array();
    if (doc.corpus_id != s->corpus->id)
        warnings.push_back("document corpus_id '" + doc.corpus_id + "' differs from session corpus '" +
                           s->corpus->id + "'; counts may differ");
    TimeRange range = s->range;
    if (doc.range.valid()) range = doc.range;
    else warnings.push_back("document has no valid range; keeping the session range");
    auto table = std::make_shared<const MeasureTable>(compute_measures(s->corpus->source(), range));
    auto tree = import_tree(doc, table->entities(), *table);
    s->tree = std::move(tree);
    s->table = std::move(table);
    s->range = range;
    ++s->epoch;
    s->clusters.clear();
    return json{{"warnings", std::move(warnings)}, {"range", range_json(range)}, {"tree", tree_json(s->tree)}};
}

}  // namespace ledgerscope
