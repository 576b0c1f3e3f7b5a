#include "sfr/nn/checkpoint.hpp"

#include <fstream>

#include "sfr/errors.hpp"
#include "sfr/io/binary.hpp"

namespace sfr::nn {

namespace {

constexpr char kMagic[4] = {'N', 'P', 'C', '1'};

void write_entries(io::LeWriter& w, const std::vector<NamedArray>& entries) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        if (e.name.size() > 0xFFFF) throw InvalidInput("checkpoint: name too long");
        w.put<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
        w.put_bytes(e.name);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(e.dims.size()));
        for (auto d : e.dims) w.put<std::uint32_t>(d);
        for (double x : e.data) w.put_f64(x);
    }
}

std::vector<NamedArray> read_entries(io::LeReader& r) {
    const auto count = r.get<std::uint32_t>();
    std::vector<NamedArray> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedArray e;
        e.name = r.get_bytes(r.get<std::uint16_t>());
        const auto rank = r.get<std::uint8_t>();
        if (rank > 2) throw FormatError("checkpoint: entry '" + e.name + "' has unsupported rank");
        std::size_t n = 1;
        for (int k = 0; k < rank; ++k) {
            e.dims.push_back(r.get<std::uint32_t>());
            n *= e.dims.back();
        }
        if (n > (std::size_t{1} << 32)) throw FormatError("checkpoint: entry '" + e.name + "' is implausibly large");
        e.data.resize(n);
        for (auto& x : e.data) x = r.get_f64();
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

NamedArray NamedArray::from_matrix(const std::string& name, const Matrix& m, int rank) {
    NamedArray a;
    a.name = name;
    if (rank == 1) {
        a.dims = {static_cast<std::uint32_t>(m.size())};
    } else if (rank == 2) {
        a.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    } else if (rank != 0) {
        throw InvalidInput("checkpoint: rank must be 0, 1 or 2");
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) a.data.push_back(m(r, c));
    return a;
}

NamedArray NamedArray::from_tensor(const std::string& name, const Tensor& t) {
    return from_matrix(name, t.value(), t.rank());
}

Matrix NamedArray::to_matrix() const {
    const Eigen::Index rows = dims.size() == 2 ? dims[0] : 1;
    const Eigen::Index cols = dims.size() == 2 ? dims[1] : (dims.size() == 1 ? dims[0] : 1);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    return m;
}

const NamedArray* Checkpoint::find(const std::string& name) const {
    for (const auto* list : {&params, &moments})
        for (const auto& e : *list)
            if (e.name == name) return &e;
    return nullptr;
}

Checkpoint snapshot(const ParameterStore& store, const OptimizerState* optimizer) {
    Checkpoint c;
    for (const auto& e : store.entries()) c.params.push_back(NamedArray::from_tensor(e.name, e.tensor));
    if (optimizer) {
        const auto& entries = store.entries();
        for (std::size_t i = 0; i < entries.size(); ++i)
            c.moments.push_back(NamedArray::from_matrix("moments/m/" + entries[i].name, optimizer->m[i],
                                                        entries[i].tensor.rank()));
        for (std::size_t i = 0; i < entries.size(); ++i)
            c.moments.push_back(NamedArray::from_matrix("moments/v/" + entries[i].name, optimizer->v[i],
                                                        entries[i].tensor.rank()));
        c.moments.push_back(
            NamedArray::from_matrix("moments/step", Matrix::Constant(1, 1, static_cast<double>(optimizer->step)), 0));
    }
    return c;
}

void restore(const Checkpoint& ckpt, ParameterStore& store, OptimizerState* optimizer) {
    std::size_t used = 0;
    for (const auto& a : ckpt.params) {
        if (a.name.rfind("meta/", 0) == 0) continue;
        Tensor t = store.find(a.name);
        Matrix m = a.to_matrix();
        if (m.rows() != t.rows() || m.cols() != t.cols())
            throw ShapeMismatch("checkpoint: shape mismatch for '" + a.name + "'");
        t.mutable_value() = m;
        ++used;
    }
    if (used != store.entries().size())
        throw FormatError("checkpoint holds " + std::to_string(used) + " parameters, model has " +
                          std::to_string(store.entries().size()));
    if (!optimizer || ckpt.moments.empty()) return;
    *optimizer = OptimizerState::for_store(store, optimizer->schedule);
    const auto& entries = store.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto* m = ckpt.find("moments/m/" + entries[i].name);
        const auto* v = ckpt.find("moments/v/" + entries[i].name);
        if (!m || !v) throw FormatError("checkpoint: missing moments for '" + entries[i].name + "'");
        optimizer->m[i] = m->to_matrix();
        optimizer->v[i] = v->to_matrix();
        if (optimizer->m[i].rows() != entries[i].tensor.rows() || optimizer->m[i].cols() != entries[i].tensor.cols())
            throw ShapeMismatch("checkpoint: moment shape mismatch for '" + entries[i].name + "'");
    }
    if (const auto* s = ckpt.find("moments/step")) optimizer->step = static_cast<std::int64_t>(s->data.at(0));
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    io::LeWriter w(os);
    w.put_bytes({kMagic, 4});
    w.put<std::uint32_t>(kCheckpointVersion);
    write_entries(w, ckpt.params);
    if (!ckpt.moments.empty()) write_entries(w, ckpt.moments);
    if (!os) throw IoError("write to '" + path.string() + "' failed");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
    io::LeReader r(is, path.string());
    if (r.get_bytes(4) != std::string_view(kMagic, 4)) throw FormatError(path.string() + ": bad magic (expected NPC1)");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.params = read_entries(r);
    if (is.peek() != std::char_traits<char>::eof()) c.moments = read_entries(r);
    return c;
}

}  // namespace sfr::nn
