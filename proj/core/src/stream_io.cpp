#include "cir/stream_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cir {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bits) {
    // Pack presence flags into bytes first (8 flags per byte, MSB first).
    std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));

    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
        if (i + 1 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (i + 2 < bytes.size()) chunk |= bytes[i + 2];
        out.push_back(kBase64Alphabet[(chunk >> 18) & 0x3f]);
        out.push_back(kBase64Alphabet[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < bytes.size() ? kBase64Alphabet[(chunk >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < bytes.size() ? kBase64Alphabet[chunk & 0x3f] : '=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode_bits(const std::string& text, std::size_t n_bits) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> bytes;
    bytes.reserve(text.size() / 4 * 3);
    std::uint32_t chunk = 0;
    int have = 0;
    for (char c : text) {
        if (c == '=') break;
        const int v = value_of(c);
        if (v < 0) throw ConfigError("schedule bitmatrix: invalid base64 character");
        chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
        if (++have == 4) {
            bytes.push_back(static_cast<std::uint8_t>((chunk >> 16) & 0xff));
            bytes.push_back(static_cast<std::uint8_t>((chunk >> 8) & 0xff));
            bytes.push_back(static_cast<std::uint8_t>(chunk & 0xff));
            chunk = 0;
            have = 0;
        }
    }
    if (have == 2) bytes.push_back(static_cast<std::uint8_t>((chunk >> 4) & 0xff));
    if (have == 3) {
        bytes.push_back(static_cast<std::uint8_t>((chunk >> 10) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((chunk >> 2) & 0xff));
    }
    if (bytes.size() * 8 < n_bits)
        throw ConfigError("schedule bitmatrix shorter than n_classes * n_experiences");
    std::vector<std::uint8_t> bits(n_bits, 0);
    for (std::size_t i = 0; i < n_bits; ++i)
        bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
    return bits;
}

json first_occurrence_to_json(const FirstOccurrenceDist& d) {
    json j;
    if (const auto* g = std::get_if<FirstOccurrenceDist::Geometric>(&d.dist)) {
        j["kind"] = "geometric";
        j["p"] = g->p;
    } else if (std::holds_alternative<FirstOccurrenceDist::Uniform>(d.dist)) {
        j["kind"] = "uniform";
    } else {
        j["kind"] = "explicit";
        j["pmf"] = std::get<FirstOccurrenceDist::Explicit>(d.dist).pmf;
    }
    return j;
}

FirstOccurrenceDist first_occurrence_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "geometric") return FirstOccurrenceDist::geometric(j.at("p").get<double>());
    if (kind == "uniform") return FirstOccurrenceDist::uniform();
    if (kind == "explicit")
        return FirstOccurrenceDist::explicit_pmf(j.at("pmf").get<std::vector<double>>());
    throw ConfigError("unknown first-occurrence kind: " + kind);
}

json repetition_to_json(const RepetitionSpec& r) {
    json j;
    if (const auto* z = std::get_if<RepetitionSpec::Zipf>(&r.spec)) {
        j["kind"] = "zipf";
        j["exponent"] = z->exponent;
    } else if (const auto* f = std::get_if<RepetitionSpec::Fixed>(&r.spec)) {
        j["kind"] = "fixed";
        j["q"] = f->q;
    } else {
        j["kind"] = "explicit";
        j["probs"] = std::get<RepetitionSpec::Explicit>(r.spec).probs;
    }
    return j;
}

RepetitionSpec repetition_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zipf") return RepetitionSpec::zipf(j.at("exponent").get<double>());
    if (kind == "fixed") return RepetitionSpec::fixed(j.at("q").get<double>());
    if (kind == "explicit")
        return RepetitionSpec::explicit_probs(j.at("probs").get<std::vector<double>>());
    throw ConfigError("unknown repetition kind: " + kind);
}

}  // namespace

std::string serialize_stream(const Stream& stream) {
    json j;
    j["version"] = kFormatVersion;

    json cfg;
    cfg["n_experiences"] = stream.config.n_experiences;
    cfg["experience_size"] = stream.config.experience_size;
    cfg["n_classes"] = stream.config.n_classes;
    cfg["samples_per_class"] = stream.config.samples_per_class;
    cfg["first_occurrence"] = first_occurrence_to_json(stream.config.first_occurrence);
    cfg["repetition"] = repetition_to_json(stream.config.repetition);
    cfg["seed"] = stream.config.seed;
    cfg["allow_empty_experiences"] = stream.config.allow_empty_experiences;
    j["config"] = cfg;

    json sched;
    sched["presence"] = base64_encode(stream.schedule.presence);
    sched["first_occurrence_index"] = stream.schedule.first_occurrence_index;
    sched["repetition_probs"] = stream.schedule.repetition_probs;
    sched["fixup_insertions"] = stream.schedule.fixup_insertions;
    sched["fixup_moves"] = stream.schedule.fixup_moves;
    j["schedule"] = sched;

    json exps = json::array();
    for (const auto& exp : stream.experiences) {
        json e;
        e["index"] = exp.index;
        e["classes"] = exp.classes;
        json samples = json::object();
        for (const auto& [c, ids] : exp.samples) samples[std::to_string(c)] = ids;
        e["samples"] = samples;
        exps.push_back(std::move(e));
    }
    j["experiences"] = exps;

    return j.dump(2) + "\n";
}

Stream deserialize_stream(std::string_view bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("stream parse failed: ") + e.what(), e.byte);
    }

    try {
        const int version = j.at("version").get<int>();
        if (version != kFormatVersion)
            throw ConfigError("unsupported stream format version " + std::to_string(version));

        Stream stream;
        const json& cfg = j.at("config");
        stream.config.n_experiences = cfg.at("n_experiences").get<std::size_t>();
        stream.config.experience_size = cfg.at("experience_size").get<std::size_t>();
        stream.config.n_classes = cfg.at("n_classes").get<std::size_t>();
        stream.config.samples_per_class = cfg.at("samples_per_class").get<std::size_t>();
        stream.config.first_occurrence = first_occurrence_from_json(cfg.at("first_occurrence"));
        stream.config.repetition = repetition_from_json(cfg.at("repetition"));
        stream.config.seed = cfg.at("seed").get<std::uint64_t>();
        stream.config.allow_empty_experiences = cfg.at("allow_empty_experiences").get<bool>();
        stream.config.validate();

        const json& sched = j.at("schedule");
        stream.schedule.n_classes = stream.config.n_classes;
        stream.schedule.n_experiences = stream.config.n_experiences;
        stream.schedule.presence =
            base64_decode_bits(sched.at("presence").get<std::string>(),
                               stream.config.n_classes * stream.config.n_experiences);
        stream.schedule.first_occurrence_index =
            sched.at("first_occurrence_index").get<std::vector<std::size_t>>();
        stream.schedule.repetition_probs =
            sched.at("repetition_probs").get<std::vector<double>>();
        stream.schedule.fixup_insertions = sched.at("fixup_insertions").get<std::size_t>();
        stream.schedule.fixup_moves = sched.at("fixup_moves").get<std::size_t>();
        if (stream.schedule.first_occurrence_index.size() != stream.config.n_classes ||
            stream.schedule.repetition_probs.size() != stream.config.n_classes)
            throw ConfigError("schedule arrays do not match n_classes");

        for (const json& e : j.at("experiences")) {
            Experience exp;
            exp.index = e.at("index").get<std::size_t>();
            exp.classes = e.at("classes").get<std::vector<int>>();
            for (const auto& [key, ids] : e.at("samples").items())
                exp.samples.emplace(std::stoi(key), ids.get<std::vector<std::size_t>>());
            stream.experiences.push_back(std::move(exp));
        }
        if (stream.experiences.size() != stream.config.n_experiences)
            throw ConfigError("experience count does not match n_experiences");
        for (std::size_t i = 0; i < stream.experiences.size(); ++i)
            if (stream.experiences[i].index != i + 1)
                throw ConfigError("experiences are not contiguously indexed from 1");
        return stream;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("stream document violates schema: ") + e.what());
    }
}

void write_stream_file(const Stream& stream, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RunError("cannot open " + path + " for writing");
    out << serialize_stream(stream);
    if (!out) throw RunError("failed writing " + path);
}

Stream read_stream_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open stream file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_stream(buf.str());
}

}  // namespace cir
