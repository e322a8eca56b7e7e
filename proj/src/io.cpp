#include "roomctl/io.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "roomctl/errors.hpp"

namespace roomctl {

namespace {

template <class Emit>
void write_entries(std::ostream& out, Emit&& emit) {
    const auto old = out.precision(17);
    out << "i,j,value\n";
    emit();
    out.precision(old);
}

template <class Sink>
void read_entries(std::istream& in, Eigen::Index rows, Eigen::Index cols, Sink&& sink) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("i,j,value", 0) != 0) {
        throw Error("coordinate file: missing `i,j,value` header");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        long i = 0;
        long j = 0;
        double v = 0.0;
        char c1 = 0;
        char c2 = 0;
        row >> i >> c1 >> j >> c2 >> v;
        if (!row || c1 != ',' || c2 != ',') {
            throw Error("coordinate file: malformed line " + std::to_string(lineno));
        }
        if (i < 0 || j < 0 || i >= rows || j >= cols) {
            throw DimensionMismatch("coordinate file: entry (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        sink(i, j, v);
    }
}

} // namespace

void write_coordinate(const SparseMatrix& a, std::ostream& out) {
    write_entries(out, [&] {
        // Row-major ordering keeps files diffable.
        const Eigen::SparseMatrix<double, Eigen::RowMajor> r = a;
        for (Eigen::Index i = 0; i < r.outerSize(); ++i) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(r, i); it; ++it) {
                if (it.value() != 0.0) {
                    out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
                }
            }
        }
    });
}

void write_coordinate(const Matrix& a, std::ostream& out) {
    write_entries(out, [&] {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.cols(); ++j) {
                if (a(i, j) != 0.0) {
                    out << i << ',' << j << ',' << a(i, j) << '\n';
                }
            }
        }
    });
}

Matrix read_coordinate_dense(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix a = Matrix::Zero(rows, cols);
    read_entries(in, rows, cols, [&](long i, long j, double v) { a(i, j) = v; });
    return a;
}

SparseMatrix read_coordinate_sparse(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    std::vector<Triplet> entries;
    read_entries(in, rows, cols, [&](long i, long j, double v) { entries.emplace_back(i, j, v); });
    SparseMatrix a(rows, cols);
    a.setFromTriplets(entries.begin(), entries.end());
    a.makeCompressed();
    return a;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    body(out);
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

void read_file(const std::filesystem::path& path, const std::function<void(std::istream&)>& body) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    body(in);
}

} // namespace roomctl
