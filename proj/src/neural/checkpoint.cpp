#include "irrig/neural/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace irrig::neural {

void Checkpoint::put(const std::string& name, const Mat& value) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
        throw InvalidArgument("checkpoint array names must be non-empty without whitespace");
    }
    arrays_[name] = value;
}

const Mat& Checkpoint::get(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw MissingArtifact("checkpoint has no array '" + name + "'");
    return it->second;
}

void Checkpoint::put_mlp(const std::string& prefix, const Mlp& net) {
    const auto& sizes = net.sizes();
    Mat s(1, static_cast<Eigen::Index>(sizes.size()));
    for (std::size_t i = 0; i < sizes.size(); ++i) s(0, static_cast<Eigen::Index>(i)) = sizes[i];
    put(prefix + ".sizes", s);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        put(prefix + ".W" + std::to_string(l), net.layers()[l].W);
        put(prefix + ".b" + std::to_string(l), net.layers()[l].b);
    }
}

Mlp Checkpoint::get_mlp(const std::string& prefix) const {
    const Mat& s = get(prefix + ".sizes");
    std::vector<int> sizes;
    for (Eigen::Index i = 0; i < s.size(); ++i) sizes.push_back(static_cast<int>(s(0, i)));
    Mlp net(sizes);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const Mat& W = get(prefix + ".W" + std::to_string(l));
        const Mat& b = get(prefix + ".b" + std::to_string(l));
        auto& layer = net.layers()[l];
        if (W.rows() != layer.W.rows() || W.cols() != layer.W.cols() || b.size() != layer.b.size()) {
            throw ShapeMismatch("checkpoint layer shape disagrees with '" + prefix + ".sizes'");
        }
        layer.W = W;
        layer.b = b;
    }
    return net;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << kCheckpointMagic << '\n';
    char buf[40];
    for (const auto& [name, m] : arrays_) {
        out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
                out << (c ? " " : "") << buf;
            }
            out << '\n';
        }
    }
    if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("checkpoint not found: " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != kCheckpointMagic) throw ConfigError("not a checkpoint (bad header): " + path.string());
    Checkpoint ck;
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    while (in >> name >> rows >> cols) {
        if (rows < 0 || cols < 0) throw ConfigError("checkpoint: negative shape for " + name);
        Mat m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                std::string tok;
                if (!(in >> tok)) throw ConfigError("checkpoint truncated in " + name);
                m(r, c) = std::strtod(tok.c_str(), nullptr);
            }
        }
        ck.arrays_[name] = std::move(m);
    }
    if (!in.eof()) throw ConfigError("checkpoint: malformed entry after " + name);
    return ck;
}

}  // namespace irrig::neural
