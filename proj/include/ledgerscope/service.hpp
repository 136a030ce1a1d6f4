#pragma once
// Session-oriented query service.
//
// Corpora are immutable and shared between sessions. A session owns an
// active time range, the measure table for that range and a classification
// tree, plus the latest clustering result per node. Mutations on a session
// are serialized by its lock; reads take it shared. Clustering runs as a
// background job that clients poll; a new job on a session cancels the
// previous one.
//
// All methods take and return JSON so that the HTTP layer stays a thin
// routing table. Errors are reported with the exception types in types.hpp.

#include "ledgerscope/corpus.hpp"
#include "ledgerscope/tree.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

namespace ledgerscope {

struct ServiceConfig {
    std::chrono::seconds session_timeout{2 * 60 * 60};
    std::uint32_t default_page_size = 400;
    std::uint32_t max_page_size = 10'000;
};

enum class TxRole { sender, receiver };

struct EntityTx {
    UnixSeconds timestamp = 0;
    Satoshi amount = 0;
    std::string tx_id;
};

// Chronological transactions of one entity in one role. The amount is the
// entity's per-transaction sent or received total.
std::vector<EntityTx> entity_transactions(const Corpus& corpus, EntityId entity, TxRole role, const TimeRange& range);

class Service {
public:
    explicit Service(ServiceConfig config = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    void add_corpus(std::shared_ptr<const Corpus> corpus);
    nlohmann::json list_corpora() const;

    // body: {corpus_id?, from?, to?}; the range defaults to the corpus extent.
    nlohmann::json create_session(const nlohmann::json& body);
    nlohmann::json session_info(const std::string& sid);
    void delete_session(const std::string& sid);
    nlohmann::json set_range(const std::string& sid, const nlohmann::json& body);

    nlohmann::json tree(const std::string& sid);
    nlohmann::json split(const std::string& sid, NodeId node, const nlohmann::json& body);
    nlohmann::json select(const std::string& sid, NodeId node);
    nlohmann::json relabel(const std::string& sid, NodeId node, const nlohmann::json& body);
    nlohmann::json delete_split(const std::string& sid, NodeId node);

    struct HistogramQuery {
        std::optional<NodeId> node;
        std::string key;
        std::string variant;
        std::uint32_t bins = kDefaultBins;
        std::string scale;
    };
    nlohmann::json histogram(const std::string& sid, const HistogramQuery& q);
    nlohmann::json volume(const std::string& sid, std::optional<NodeId> node, const std::string& bucket);

    // body: {node?, features, k, seed?, max_iterations?, tolerance?, log_counts?, min_max?}
    nlohmann::json start_cluster(const std::string& sid, const nlohmann::json& body);
    nlohmann::json job(const std::string& job_id);
    nlohmann::json cancel_job(const std::string& job_id);
    // Blocks until the job leaves the running state; for scripted clients.
    nlohmann::json wait_job(const std::string& job_id);
    // body: {cluster, label?, remainder_label?}
    nlohmann::json materialize_cluster(const std::string& sid, NodeId node, const nlohmann::json& body);

    struct EntityQuery {
        std::optional<NodeId> node;
        std::optional<std::uint32_t> cluster;
        std::string sort = "num_txs_sender";
        std::string variant;
        bool descending = true;
        std::uint32_t page = 0;
        std::optional<std::uint32_t> page_size;
    };
    nlohmann::json list_entities(const std::string& sid, const EntityQuery& q);
    nlohmann::json entity_transactions(const std::string& sid, EntityId entity, const std::string& role,
                                       std::optional<TimeRange> range);

    nlohmann::json export_document(const std::string& sid);
    nlohmann::json import_document(const std::string& sid, const nlohmann::json& doc);

    // Drops sessions idle for longer than the configured timeout.
    std::size_t expire_idle();
    std::size_t session_count() const;

private:
    struct Session;
    struct Job;

    std::shared_ptr<Session> session(const std::string& sid);
    std::shared_ptr<const Corpus> corpus(const std::string& id) const;

    ServiceConfig config_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const Corpus>> corpora_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::uint64_t next_session_ = 1;
    std::uint64_t next_job_ = 1;
};

}  // namespace ledgerscope
