#pragma once

#include "phi4n/kernels.hpp"
#include "phi4n/oracle.hpp"

#include <boost/rational.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace phi4n {
namespace ibp {

using Rational = boost::rational<long long>;

enum class VertexRole { Special, Internal };
enum class EdgeKind { C, K };

struct Vertex {
    VertexRole role = VertexRole::Internal;
    int wavy = 0; // field factor at the vertex: 0 none, 1 single, 2 double, 3 triple
};

struct Edge {
    int a = 0;
    int b = 0;
    EdgeKind kind = EdgeKind::C;
};

/**
 * One term of the expansion: a kernel graph with a rational coefficient, a
 * half-integer explicit power of 1/N (stored doubled), and a power of the
 * scalar s = C2hat(0)/(1 + C2hat(0)) that tadpole substitution produces.
 *
 * Special vertices occupy indices 0..n_special-1 and carry the external
 * evaluation points. Every vertex satisfies the budget rule
 * wavy + deg_C + 2 deg_K = 2 (special) or 4 (internal).
 */
struct IbpGraph {
    int n_special = 0;
    std::vector<Vertex> vertices;
    std::vector<Edge> edges;
    Rational coefficient = Rational(1);
    int twice_power = 0;
    int scalar_pow = 0;
};

/** Total number of field legs (sum of wavy markers); even for well-formed graphs. */
int n_phi(const IbpGraph& g);

/** 1 when every wavy marker is even, 2 when exactly two are odd. */
int parity_class(const IbpGraph& g);

/** Checks the vertex budget, wavy ranges, self-loop and parity rules; throws on violation. */
void validate(const IbpGraph& g);

/** The k-point starting term: k special double-wavy vertices, no edges, coefficient 1, power 0. */
IbpGraph start_graph(int k);

/**
 * Canonical relabeling of the internal vertices (specials stay fixed);
 * returns an encoding string usable as a merge key. Ignores coefficient
 * and power fields.
 */
std::string canonical_key(const IbpGraph& g);

/** Index of the vertex the next rewrite acts on: first double-wavy for class 1, first odd-wavy for class 2. */
int rewrite_vertex(const IbpGraph& g);

/**
 * One step of the radial recursion at double-wavy vertex v of a class-1
 * graph, already solved with the resolvent: every emitted term carries a
 * fresh K junction at v. Emits the pairing terms (coefficient 2, power
 * shift 0), the convolution remainder (-2, +1), and the three interacting
 * remainder families (+4 at +1/2 per ordered spectator pair, -4 at +1/2
 * per spectator, +1 at +1/2).
 */
std::vector<IbpGraph> rewrite_class1(const IbpGraph& g, int v);

/**
 * Integration by parts at the first odd vertex of a class-2 graph: the
 * sigma term joining the two odd vertices (coefficient 1, shift 0 and a
 * 2 m2 copy at +1), one pairing term per double-wavy spectator (+2 at
 * +1/2), and the triple-wavy remainder (-1 at +1/2).
 */
std::vector<IbpGraph> rewrite_class2(const IbpGraph& g);

/**
 * Substitution for a graph whose only field content is one isolated
 * double-wavy vertex: the resolved one-point structure at power +1/2 and
 * the scalar correction (coefficient -2, power +1, scalar_pow +1).
 */
std::vector<IbpGraph> tadpole_substitute(const IbpGraph& g);

struct ExpansionResult {
    // closed (wavy-free) terms grouped by doubled power of 1/N
    std::map<int, std::vector<IbpGraph>> closed_terms;
    // structurally exact leftovers beyond the requested order
    std::vector<IbpGraph> remainder_terms;
};

/** Full mechanical expansion of the k-point function to order p (k <= 4, p <= 1). */
ExpansionResult expand(int k, int p);

/** Thrown when an irreducible vertex core is too large to sum directly on the given grid. */
struct WorkBudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Numerical value of a closed term at the given special-vertex points:
 * kernel edges are C for EdgeKind::C and delta + L for EdgeKind::K,
 * internal vertices integrate with weight eps^2.
 */
double evaluate(const IbpGraph& g, const KernelSet& ks, const PointTuple& specials);

/** Sum of evaluate over a list of closed terms. */
double evaluate_sum(const std::vector<IbpGraph>& terms, const KernelSet& ks, const PointTuple& specials);

} // namespace ibp
} // namespace phi4n
