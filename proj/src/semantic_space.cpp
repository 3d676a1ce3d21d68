#include "mmhcl/semantic_space.hpp"

#include "mmhcl/errors.hpp"
#include "mmhcl/io.hpp"
#include "mmhcl/numerics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace mmhcl {

void validate_catalog(const ClassCatalog& catalog) {
    const int n = catalog.size();
    if (n < 2) throw load_error("catalog: need at least 2 classes, got " + std::to_string(n));
    if (static_cast<int>(catalog.names.size()) != n)
        throw load_error("catalog: name count does not match embedding rows");
    std::set<std::string> seen;
    for (const std::string& name : catalog.names) {
        if (name.empty()) throw load_error("catalog: empty class name");
        if (!seen.insert(name).second) throw load_error("catalog: duplicate class name '" + name + "'");
    }
    if (!all_finite(catalog.embeddings)) throw load_error("catalog: non-finite embedding entry");
    for (int i = 0; i < n; ++i) {
        double sq = 0.0;
        for (int j = 0; j < catalog.dim(); ++j) sq += catalog.embeddings(i, j) * catalog.embeddings(i, j);
        if (sq == 0.0)
            throw load_error("catalog: zero-norm embedding for class '" + catalog.names[static_cast<std::size_t>(i)] + "'");
    }
}

ClassCatalog load_catalog(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw load_error(path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "name")
        throw load_error(path + ": expected header 'name,e0,...'");
    const int dim = static_cast<int>(header.size()) - 1;

    ClassCatalog catalog;
    std::vector<double> values;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const auto fields = split_csv_line(line);
        const std::string where = path + " row " + std::to_string(row);
        if (static_cast<int>(fields.size()) != dim + 1)
            throw load_error(where + ": expected " + std::to_string(dim + 1) + " fields, got " +
                             std::to_string(fields.size()));
        catalog.names.push_back(fields[0]);
        for (int j = 0; j < dim; ++j)
            values.push_back(parse_double(fields[static_cast<std::size_t>(j) + 1], where));
    }
    catalog.embeddings = Mat(row, dim);
    catalog.embeddings.data = std::move(values);
    validate_catalog(catalog);
    return catalog;
}

void save_catalog(const ClassCatalog& catalog, const std::string& path) {
    std::ostringstream out;
    out << "name";
    for (int j = 0; j < catalog.dim(); ++j) out << ",e" << j;
    out << "\n";
    for (int i = 0; i < catalog.size(); ++i) {
        const std::string& name = catalog.names[static_cast<std::size_t>(i)];
        if (name.find(',') != std::string::npos)
            throw std::invalid_argument("save_catalog: class name contains a comma: " + name);
        out << name;
        for (int j = 0; j < catalog.dim(); ++j) out << "," << format_double(catalog.embeddings(i, j));
        out << "\n";
    }
    write_text_file(path, out.str());
}

SimilarityMatrix class_similarity(const ClassCatalog& catalog) {
    validate_catalog(catalog);
    const int n = catalog.size();
    SimilarityMatrix s;
    s.values = Mat(n, n);
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * n * catalog.dim() > 16384)
    for (int i = 0; i < n; ++i) {
        const Vec ci = row_copy(catalog.embeddings, i);
        s.values(i, i) = 1.0; // exact by definition
        for (int j = i + 1; j < n; ++j) {
            const double c = cosine(ci, row_copy(catalog.embeddings, j));
            s.values(i, j) = c;
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) s.values(i, j) = s.values(j, i);
    return s;
}

namespace {

// Rank of every column in one row: larger value first; on equal values the
// diagonal wins (keeps the unit self-similarity), then lower index.
std::vector<int> row_order(const Mat& values, int row) {
    std::vector<int> order(static_cast<std::size_t>(values.cols));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = values(row, a);
        const double vb = values(row, b);
        if (va != vb) return va > vb;
        if ((a == row) != (b == row)) return a == row;
        return a < b;
    });
    return order;
}

void prune_row(const Mat& src, Mat& dst, int row, int k) {
    const auto order = row_order(src, row);
    for (int r = 0; r < k; ++r) {
        const int col = order[static_cast<std::size_t>(r)];
        dst(row, col) = src(row, col);
    }
}

} // namespace

SimilarityMatrix prune_topk(const SimilarityMatrix& s, int k) {
    const int n = s.values.rows;
    require(!s.pruned_k.has_value(), "prune_topk: input already pruned");
    require(k >= 1 && k <= n, "prune_topk: k out of range [1, N]");
    SimilarityMatrix out;
    out.values = Mat(n, n, 0.0);
    out.pruned_k = k;
    for (int i = 0; i < n; ++i) prune_row(s.values, out.values, i, k);
    return out;
}

SimilarityMatrix prune_topk_scoped(const SimilarityMatrix& s, int k,
                                   const std::vector<int>& seen_rows) {
    const int n = s.values.rows;
    require(!s.pruned_k.has_value(), "prune_topk_scoped: input already pruned");
    require(k >= 1 && k <= n, "prune_topk_scoped: k out of range [1, N]");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int r : seen_rows) {
        require(r >= 0 && r < n, "prune_topk_scoped: row index out of range");
        seen[static_cast<std::size_t>(r)] = true;
    }
    SimilarityMatrix out;
    out.values = Mat(n, n, 0.0);
    out.pruned_k = k;
    for (int i = 0; i < n; ++i) {
        if (seen[static_cast<std::size_t>(i)]) {
            prune_row(s.values, out.values, i, k);
        } else {
            out.values(i, i) = s.values(i, i);
        }
    }
    return out;
}

} // namespace mmhcl
