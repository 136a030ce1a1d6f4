#pragma once
// Deterministic synthetic ledgers with planted behaviour and ground truth.
//
// Profiles:
//   one_timer      one address, exactly one receiving transaction, never sends
//   miner          receives at least two coinbase outputs; may sell to an exchange
//   miner_before / miner_after / miner_both
//                  miners whose activity lies before, after, or on both sides
//                  of event_time (used when event_time is set)
//   exchange       many addresses, pays out to every other profile and takes
//                  deposits; the first exchange is tagged "MtGox"
//   regular        low activity multi-timer (a few payouts, one or two sends)
//   high_activity  hundreds of payouts and sends
//
// Every multi-address entity co-spends all of its addresses at least once and
// change always returns to an address already among the inputs, so the
// input-address heuristic recovers the planted entities exactly. Only miners
// ever appear in coinbase transactions.

#include "ledgerscope/ingest.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ledgerscope {

struct GeneratorConfig {
    std::uint64_t seed = 1;
    std::uint32_t n_entities = 1000;
    double one_timer_fraction = 0.0;
    std::uint32_t n_miners = 0;
    std::uint32_t n_exchanges = 1;
    std::uint32_t n_high_activity = 0;
    UnixSeconds start_time = 1'230'768'000;  // 2009-01-01
    UnixSeconds end_time = 1'325'376'000;    // 2012-01-01
    // Optional split point for miner phases.
    std::optional<UnixSeconds> event_time;
    // Fractions of miners active before only / after only; the rest are both.
    double miner_before_fraction = 0.4;
    double miner_after_fraction = 0.3;
    // Payout counts per regular / high-activity entity, inclusive ranges.
    std::uint32_t regular_payouts_min = 2, regular_payouts_max = 3;
    std::uint32_t regular_sends_min = 1, regular_sends_max = 2;
    std::uint32_t high_payouts_min = 300, high_payouts_max = 320;
    std::uint32_t high_sends_min = 150, high_sends_max = 160;
    // Extra deposits from each exchange to itself; pads transaction volume.
    std::uint32_t exchange_internal_txs = 0;

    std::uint32_t one_timer_count() const;
    // Throws InvalidArgument on inconsistent counts or ranges.
    void validate() const;
};

GeneratorConfig parse_generator_config(std::istream& in);  // JSON object

struct GroundTruth {
    std::string addr;
    std::uint32_t entity_gt = 0;
    std::string profile;
    bool operator==(const GroundTruth&) const = default;
};

struct SyntheticCorpus {
    std::vector<RawTransaction> transactions;  // sorted by (time, txid)
    std::vector<GroundTruth> truth;            // one row per address
    std::vector<std::string> entity_profile;   // indexed by entity_gt
    std::string tags_csv;                      // known-address list for the exchanges

    std::size_t count_profile(std::string_view prefix) const;
};

SyntheticCorpus generate_synthetic(const GeneratorConfig& cfg);

void write_ground_truth(std::ostream& out, const std::vector<GroundTruth>& truth);
std::vector<GroundTruth> read_ground_truth(std::istream& in);

}  // namespace ledgerscope
