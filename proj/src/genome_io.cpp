#include "sdscan/genome_io.hpp"

#include "sdscan/dna.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace sdscan {

void Genome::add(Sequence seq) {
    if (seq.mask.size() != seq.bases.size())
        throw std::invalid_argument("mask length differs from bases for " + seq.name);
    if (by_name_.count(seq.name)) throw std::invalid_argument("duplicate sequence name " + seq.name);
    for (char c : seq.bases)
        if (c != 'A' && c != 'C' && c != 'G' && c != 'T' && c != 'N')
            throw std::invalid_argument("invalid base in " + seq.name);
    by_name_.emplace(seq.name, seqs_.size());
    offsets_.push_back(total_);
    total_ += seq.bases.size();
    seqs_.push_back(std::move(seq));
}

std::optional<std::size_t> Genome::find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::size_t Genome::locate(std::uint64_t pos) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), pos);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

std::uint64_t Genome::masked_count(std::size_t seq, std::uint64_t begin, std::uint64_t end) const {
    const auto& m = seqs_[seq].mask;
    return static_cast<std::uint64_t>(std::count(m.begin() + begin, m.begin() + end, true));
}

Genome Genome::reverse_complement() const {
    Genome rc;
    for (const auto& s : seqs_) {
        Sequence r;
        r.name = s.name;
        r.bases = sdscan::reverse_complement(s.bases);
        r.mask.assign(s.mask.rbegin(), s.mask.rend());
        rc.add(std::move(r));
    }
    return rc;
}

std::uint64_t overlap_length(const Interval& a, const Interval& b) {
    if (a.seq_name != b.seq_name) return 0;
    auto lo = std::max(a.start, b.start);
    auto hi = std::min(a.end, b.end);
    return hi > lo ? hi - lo : 0;
}

bool record_less(const SDRecord& a, const SDRecord& b) {
    if (position_less(a.mate1, b.mate1)) return true;
    if (position_less(b.mate1, a.mate1)) return false;
    if (position_less(a.mate2, b.mate2)) return true;
    if (position_less(b.mate2, a.mate2)) return false;
    if (a.mate1.strand != b.mate1.strand) return a.mate1.strand < b.mate1.strand;
    if (a.mate2.strand != b.mate2.strand) return a.mate2.strand < b.mate2.strand;
    return a.cigar < b.cigar;
}

namespace {

class LineSource {
  public:
    virtual ~LineSource() = default;
    virtual bool next(std::string& line) = 0;
};

class StreamLines : public LineSource {
  public:
    explicit StreamLines(std::istream& in) : in_(in) {}
    bool next(std::string& line) override { return static_cast<bool>(std::getline(in_, line)); }

  private:
    std::istream& in_;
};

class GzLines : public LineSource {
  public:
    explicit GzLines(const std::string& path) : fp_(gzopen(path.c_str(), "rb")) {
        if (!fp_) throw IoError("cannot open " + path);
    }
    ~GzLines() override { gzclose(fp_); }
    GzLines(const GzLines&) = delete;
    GzLines& operator=(const GzLines&) = delete;

    bool next(std::string& line) override {
        line.clear();
        char buf[1 << 16];
        while (gzgets(fp_, buf, sizeof buf)) {
            line += buf;
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                return true;
            }
        }
        int err = 0;
        gzerror(fp_, &err);
        if (err != Z_OK && err != Z_STREAM_END) throw IoError("gzip read error");
        return !line.empty();
    }

  private:
    gzFile fp_;
};

Genome parse_lines(LineSource& src) {
    Genome genome;
    Sequence cur;
    bool have = false;
    std::size_t header_line = 0;
    std::size_t lineno = 0;
    std::unordered_map<std::string, std::size_t> seen;

    auto flush = [&] {
        if (!have) return;
        if (cur.bases.empty()) throw ParseError("empty sequence '" + cur.name + "'", header_line);
        genome.add(std::move(cur));
        cur = Sequence{};
    };

    std::string line;
    while (src.next(line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            flush();
            auto b = line.find_first_not_of(" \t", 1);
            if (b == std::string::npos) throw ParseError("missing sequence name in header", lineno);
            auto e = line.find_first_of(" \t", b);
            cur.name = line.substr(b, e == std::string::npos ? std::string::npos : e - b);
            if (!seen.emplace(cur.name, lineno).second)
                throw ParseError("duplicate sequence name '" + cur.name + "'", lineno);
            header_line = lineno;
            have = true;
            continue;
        }
        if (!have) throw ParseError("sequence data before first header", lineno);
        for (char c : line) {
            if (c == ' ' || c == '\t') continue;
            if (!std::isalpha(static_cast<unsigned char>(c)))
                throw ParseError(std::string("invalid character '") + c + "'", lineno);
            bool lower = std::islower(static_cast<unsigned char>(c));
            auto code = base_code(c);
            cur.bases.push_back(code == kBaseN ? 'N' : "ACGT"[code]);
            cur.mask.push_back(lower);
        }
    }
    flush();
    return genome;
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

Genome parse_fasta(std::istream& in) {
    StreamLines src(in);
    return parse_lines(src);
}

Genome parse_fasta(const std::string& path) {
    if (ends_with(path, ".gz")) {
        GzLines src(path);
        return parse_lines(src);
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_fasta(in);
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

int bedpe_score(double error_total) {
    auto s = std::lround(1000.0 * (1.0 - error_total));
    return static_cast<int>(std::clamp<long>(s, 0, 1000));
}

void write_bedpe(std::vector<SDRecord> records, std::ostream& out) {
    std::sort(records.begin(), records.end(), record_less);
    for (const auto& r : records) {
        out << r.mate1.seq_name << '\t' << r.mate1.start << '\t' << r.mate1.end << '\t'
            << r.mate2.seq_name << '\t' << r.mate2.start << '\t' << r.mate2.end << '\t'
            << '.' << '\t' << bedpe_score(r.error_total) << '\t'
            << strand_char(r.mate1.strand) << '\t' << strand_char(r.mate2.strand) << '\t'
            << r.alignment_length << '\t' << r.edit_distance << '\t'
            << format_double(r.error_total) << '\t' << format_double(r.error_mutation) << '\t'
            << format_double(r.error_gap) << '\t' << format_double(r.kimura) << '\t'
            << format_double(r.jukes_cantor) << '\t' << r.cigar << '\n';
    }
    if (!out) throw IoError("write failed");
}

void write_bedpe(std::vector<SDRecord> records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_bedpe(std::move(records), out);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

namespace {

template <typename T>
T parse_number(const std::string& field, std::size_t lineno) {
    if constexpr (std::is_floating_point_v<T>) {
        if (field == "inf") return std::numeric_limits<T>::infinity();
    }
    T v{};
    auto r = std::from_chars(field.data(), field.data() + field.size(), v);
    if (r.ec != std::errc{} || r.ptr != field.data() + field.size())
        throw ParseError("bad numeric field '" + field + "'", lineno);
    return v;
}

Strand parse_strand(const std::string& f, std::size_t lineno) {
    if (f == "+") return Strand::forward;
    if (f == "-") return Strand::reverse;
    throw ParseError("bad strand '" + f + "'", lineno);
}

} // namespace

std::vector<SDRecord> read_bedpe(std::istream& in) {
    std::vector<SDRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::size_t b = 0;
        while (true) {
            auto e = line.find('\t', b);
            f.push_back(line.substr(b, e == std::string::npos ? std::string::npos : e - b));
            if (e == std::string::npos) break;
            b = e + 1;
        }
        if (f.size() < 10) throw ParseError("expected at least 10 BEDPE columns", lineno);
        SDRecord r;
        r.mate1 = {f[0], parse_number<std::uint64_t>(f[1], lineno), parse_number<std::uint64_t>(f[2], lineno),
                   parse_strand(f[8], lineno)};
        r.mate2 = {f[3], parse_number<std::uint64_t>(f[4], lineno), parse_number<std::uint64_t>(f[5], lineno),
                   parse_strand(f[9], lineno)};
        if (f.size() >= 18) {
            r.alignment_length = parse_number<std::uint64_t>(f[10], lineno);
            r.edit_distance = parse_number<std::uint64_t>(f[11], lineno);
            r.error_total = parse_number<double>(f[12], lineno);
            r.error_mutation = parse_number<double>(f[13], lineno);
            r.error_gap = parse_number<double>(f[14], lineno);
            r.kimura = parse_number<double>(f[15], lineno);
            r.jukes_cantor = parse_number<double>(f[16], lineno);
            r.cigar = f[17];
        } else {
            r.error_total = 1.0 - parse_number<double>(f[7], lineno) / 1000.0;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SDRecord> read_bedpe(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_bedpe(in);
}

void write_fasta(const Genome& genome, std::ostream& out, std::size_t line_width) {
    for (const auto& s : genome) {
        out << '>' << s.name << '\n';
        std::string line;
        for (std::size_t i = 0; i < s.bases.size(); i += line_width) {
            auto n = std::min(line_width, s.bases.size() - i);
            line.assign(s.bases, i, n);
            for (std::size_t j = 0; j < n; ++j)
                if (s.mask[i + j]) line[j] = static_cast<char>(std::tolower(line[j]));
            out << line << '\n';
        }
    }
}

} // namespace sdscan
