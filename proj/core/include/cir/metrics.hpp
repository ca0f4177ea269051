#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cir {

/// One run's results: a (strategy, stream, seed) key, the per-experience
/// test-accuracy trajectory, and the final accuracy. Wall-clock timings are
/// carried in memory and written to the run log only; the canonical records
/// file must be byte-identical across reruns.
struct MetricsRecord {
    std::string strategy;
    std::string stream;
    std::uint64_t seed = 0;
    std::vector<double> trajectory;  // one entry per experience
    double final_accuracy = 0.0;
    std::vector<double> wall_clock_s;  // per experience; not persisted in .rec
    bool failed = false;
    std::string diagnostic;
};

std::string record_to_json_line(const MetricsRecord& record);
MetricsRecord record_from_json_line(std::string_view line);

void write_records_file(const std::string& path, std::span<const MetricsRecord> records);
std::vector<MetricsRecord> read_records_file(const std::string& path);

/// Minimal glob: '*' wildcards within the final path component.
std::vector<std::string> expand_glob(const std::string& pattern);
std::vector<MetricsRecord> read_records_glob(const std::string& pattern);

/// Mean final accuracy per (strategy, stream) plus the per-strategy average
/// across streams. Rows are ordered by average (descending), ties by id.
/// Failed records are excluded from the aggregation.
struct CompareTable {
    std::vector<std::string> streams;
    struct Row {
        std::string strategy;
        std::map<std::string, double> per_stream;  // absent key = no data
        double average = 0.0;
    };
    std::vector<Row> rows;
};

CompareTable compare(std::span<const MetricsRecord> records);
std::string render_table(const CompareTable& table);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace cir
