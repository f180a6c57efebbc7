#include "pacrr/checkpoint.hpp"

#include "pacrr/error.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace pacrr {

namespace {

constexpr const char* kMagic = "pacrr-checkpoint 1";

std::string next_line(std::istream& in, std::size_t& line_no) {
    std::string line;
    if (!std::getline(in, line)) throw Error("truncated checkpoint after line " + std::to_string(line_no));
    ++line_no;
    return line;
}

std::size_t read_setting(std::istream& in, std::size_t& line_no, const std::string& key) {
    const std::string line = next_line(in, line_no);
    const std::string prefix = key + "=";
    if (line.rfind(prefix, 0) != 0) throw Error("checkpoint line " + std::to_string(line_no) + ": expected " + key);
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(line.c_str() + prefix.size(), &end, 10);
    if (errno != 0 || end == line.c_str() + prefix.size() || *end != '\0') {
        throw Error("checkpoint line " + std::to_string(line_no) + ": bad value for " + key);
    }
    return static_cast<std::size_t>(v);
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k > 0) s.push_back('x');
        s += std::to_string(shape[k]);
    }
    return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
    const auto& c = params.config();
    out << kMagic << '\n'
        << "l_q=" << c.l_q << '\n'
        << "l_d=" << c.l_d << '\n'
        << "l_g=" << c.l_g << '\n'
        << "l_f=" << c.l_f << '\n'
        << "n_s=" << c.n_s << '\n'
        << "lstm_hidden=" << c.lstm_hidden << '\n'
        << "tensors=" << params.tensors().size() << '\n';
    char buf[40];
    for (const auto& t : params.tensors()) {
        out << "tensor " << t.name << ' ' << shape_string(t.shape) << '\n';
        for (std::size_t k = 0; k < t.data.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%a", t.data[k]);
            if (k > 0) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    out << "end\n";
}

ModelParams read_checkpoint(std::istream& in) {
    std::size_t line_no = 0;
    if (next_line(in, line_no) != kMagic) throw Error("not a pacrr checkpoint");
    ModelConfig c;
    c.l_q = read_setting(in, line_no, "l_q");
    c.l_d = read_setting(in, line_no, "l_d");
    c.l_g = read_setting(in, line_no, "l_g");
    c.l_f = read_setting(in, line_no, "l_f");
    c.n_s = read_setting(in, line_no, "n_s");
    c.lstm_hidden = read_setting(in, line_no, "lstm_hidden");
    c.validate();
    const std::size_t count = read_setting(in, line_no, "tensors");

    std::vector<Tensor> tensors;
    for (std::size_t k = 0; k < count; ++k) {
        std::istringstream head(next_line(in, line_no));
        std::string tag, name, shape;
        if (!(head >> tag >> name >> shape) || tag != "tensor") {
            throw Error("checkpoint line " + std::to_string(line_no) + ": expected tensor header");
        }
        Tensor t;
        t.name = name;
        std::size_t total = 1;
        std::istringstream dims(shape);
        std::string dim;
        while (std::getline(dims, dim, 'x')) {
            char* end = nullptr;
            const unsigned long long d = std::strtoull(dim.c_str(), &end, 10);
            if (dim.empty() || *end != '\0') throw Error("checkpoint line " + std::to_string(line_no) + ": bad shape");
            t.shape.push_back(static_cast<std::size_t>(d));
            total *= t.shape.back();
        }
        const std::string values = next_line(in, line_no);
        const char* p = values.c_str();
        t.data.reserve(total);
        for (std::size_t n = 0; n < total; ++n) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) throw Error("checkpoint line " + std::to_string(line_no) + ": too few values");
            t.data.push_back(v);
            p = end;
        }
        while (*p == ' ') ++p;
        if (*p != '\0') throw Error("checkpoint line " + std::to_string(line_no) + ": too many values");
        tensors.push_back(std::move(t));
    }
    if (next_line(in, line_no) != "end") throw Error("checkpoint missing end marker");
    return ModelParams::from_tensors(c, std::move(tensors));
}

}  // namespace pacrr
