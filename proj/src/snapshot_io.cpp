#include "bbm/snapshot_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bbm {

namespace {

std::string real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string header_value(const std::string& line, const std::string& key) {
    const std::string prefix = "# " + key + "=";
    if (line.rfind(prefix, 0) != 0) throw ConfigError("snapshot header: expected '" + prefix + "'");
    return line.substr(prefix.size());
}

double parse_real(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("snapshot: malformed number '" + s + "'");
    return v;
}

}  // namespace

void write_snapshot_csv(std::ostream& out, const ParticleSnapshot& snapshot, double horizon,
                        const VarianceProfile& profile, const std::optional<BarrierSpec>& barrier) {
    out << "# bbm-lab particle snapshot v1\n";
    out << "# seed=" << snapshot.provenance.seed << '\n';
    out << "# replica_id=" << snapshot.provenance.replica_id << '\n';
    out << "# horizon=" << real(horizon) << '\n';
    out << "# snapshot_time=" << real(snapshot.time) << '\n';
    out << "# profile=" << profile.describe() << '\n';
    out << "# barrier=";
    if (barrier) out << "start:" << real(barrier->start_time) << ";slope:" << real(barrier->slope);
    else out << "none";
    out << '\n';
    out << "# particles=" << snapshot.size() << '\n';

    out << "particle_id,position";
    for (const auto& [r, _] : snapshot.ancestor_at) out << ",ancestor_at_" << real(r);
    if (snapshot.barrier_exceeded) out << ",barrier_exceeded";
    out << '\n';

    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        out << i << ',' << real(snapshot.positions[i]);
        for (const auto& [r, anc] : snapshot.ancestor_at) out << ',' << anc[i];
        if (snapshot.barrier_exceeded) out << ',' << int{(*snapshot.barrier_exceeded)[i]};
        out << '\n';
    }
}

ParticleSnapshot read_snapshot_csv(std::istream& in) {
    std::vector<std::string> header(8);
    for (auto& line : header) {
        if (!std::getline(in, line)) throw ConfigError("snapshot: truncated header");
    }
    if (header[0] != "# bbm-lab particle snapshot v1") throw ConfigError("snapshot: unknown format");

    ParticleSnapshot snap;
    snap.provenance.seed = std::stoull(header_value(header[1], "seed"));
    snap.provenance.replica_id = std::stoull(header_value(header[2], "replica_id"));
    snap.time = parse_real(header_value(header[4], "snapshot_time"));
    const std::size_t n = std::stoull(header_value(header[7], "particles"));

    std::string line;
    if (!std::getline(in, line)) throw ConfigError("snapshot: missing column header");
    const auto columns = split(line, ',');
    if (columns.size() < 2 || columns[0] != "particle_id" || columns[1] != "position")
        throw ConfigError("snapshot: bad column header");
    std::vector<std::vector<std::uint32_t>*> ancestor_cols;
    bool has_flags = false;
    for (std::size_t c = 2; c < columns.size(); ++c) {
        const std::string prefix = "ancestor_at_";
        if (columns[c].rfind(prefix, 0) == 0) {
            const double r = parse_real(columns[c].substr(prefix.size()));
            ancestor_cols.push_back(&snap.ancestor_at[r]);
        } else if (columns[c] == "barrier_exceeded" && c + 1 == columns.size()) {
            has_flags = true;
        } else {
            throw ConfigError("snapshot: unknown column '" + columns[c] + "'");
        }
    }
    if (has_flags) snap.barrier_exceeded.emplace();

    snap.positions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw ConfigError("snapshot: fewer rows than declared");
        const auto fields = split(line, ',');
        if (fields.size() != columns.size()) throw ConfigError("snapshot: ragged row");
        if (std::stoull(fields[0]) != i) throw ConfigError("snapshot: particle ids out of order");
        snap.positions.push_back(parse_real(fields[1]));
        for (std::size_t a = 0; a < ancestor_cols.size(); ++a)
            ancestor_cols[a]->push_back(static_cast<std::uint32_t>(std::stoul(fields[2 + a])));
        if (has_flags) snap.barrier_exceeded->push_back(static_cast<std::uint8_t>(std::stoi(fields.back())));
    }
    return snap;
}

}  // namespace bbm
