#include "heapver/lia.hpp"

#include <algorithm>
#include <numeric>

namespace heapver::lia {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw LimitError("coefficient overflow");
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw LimitError("coefficient overflow");
    return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// symmetric residue in [-m/2, m/2)
std::int64_t sym_mod(std::int64_t a, std::int64_t m) {
    return a - checked_mul(m, floor_div(checked_add(checked_mul(2, a), m), 2 * m));
}

LinTerm scaled(const LinTerm& t, std::int64_t c) {
    LinTerm out;
    out.constant = checked_mul(t.constant, c);
    for (const auto& [v, k] : t.coeffs) out.coeffs[v] = checked_mul(k, c);
    return out;
}

LinTerm plus(const LinTerm& a, const LinTerm& b) {
    LinTerm out = a;
    out.constant = checked_add(out.constant, b.constant);
    for (const auto& [v, k] : b.coeffs) {
        auto it = out.coeffs.find(v);
        if (it == out.coeffs.end()) {
            if (k != 0) out.coeffs.emplace(v, k);
        } else {
            it->second = checked_add(it->second, k);
            if (it->second == 0) out.coeffs.erase(it);
        }
    }
    return out;
}

// substitute x := rhs into t, where t's coefficient of x is folded in
LinTerm subst_var(const LinTerm& t, const Var& x, const LinTerm& rhs) {
    auto it = t.coeffs.find(x);
    if (it == t.coeffs.end()) return t;
    std::int64_t c = it->second;
    LinTerm out = t;
    out.coeffs.erase(x);
    return plus(out, scaled(rhs, c));
}

struct Problem {
    std::vector<LinTerm> eqs; // each = 0
    std::vector<LinTerm> ges; // each >= 0
};

struct Budget {
    std::uint64_t left;
    void spend() {
        if (left == 0) throw LimitError("node budget exhausted");
        --left;
    }
};

// gcd-tighten rows in place; nullopt when a row is contradictory
bool tighten(Problem& p) {
    for (auto it = p.eqs.begin(); it != p.eqs.end();) {
        if (it->coeffs.empty()) {
            if (it->constant != 0) return false;
            it = p.eqs.erase(it);
            continue;
        }
        std::int64_t g = 0;
        for (const auto& [v, c] : it->coeffs) {
            (void)v;
            g = std::gcd(g, std::abs(c));
        }
        if (it->constant % g != 0) return false; // no integer solution
        if (g > 1) {
            for (auto& [v, c] : it->coeffs) {
                (void)v;
                c /= g;
            }
            it->constant /= g;
        }
        ++it;
    }
    for (auto it = p.ges.begin(); it != p.ges.end();) {
        if (it->coeffs.empty()) {
            if (it->constant < 0) return false;
            it = p.ges.erase(it);
            continue;
        }
        std::int64_t g = 0;
        for (const auto& [v, c] : it->coeffs) {
            (void)v;
            g = std::gcd(g, std::abs(c));
        }
        if (g > 1) {
            for (auto& [v, c] : it->coeffs) {
                (void)v;
                c /= g;
            }
            it->constant = floor_div(it->constant, g);
        }
        ++it;
    }
    return true;
}

bool solve(Problem p, Budget& budget, int& sigma_counter);

// Eliminate one equality. Fast path: some variable has a unit coefficient.
// Otherwise introduce a fresh variable over the symmetric residues modulo
// (smallest coefficient + 1); that equation has a unit coefficient for the
// variable that attained the minimum, and substituting it shrinks the
// original coefficients, so the loop terminates.
void eliminate_equality(Problem& p, Budget& budget, int& sigma_counter) {
    budget.spend();
    LinTerm eq = p.eqs.back();
    for (const auto& [v, c] : eq.coeffs) {
        if (c != 1 && c != -1) continue;
        p.eqs.pop_back();
        // v = -(eq - c*v) / c  =  -c * (eq without v)
        LinTerm rest = eq;
        rest.coeffs.erase(v);
        LinTerm rhs = scaled(rest, -c);
        for (auto& row : p.eqs) row = subst_var(row, v, rhs);
        for (auto& row : p.ges) row = subst_var(row, v, rhs);
        return;
    }
    // modulus trick
    Var xk;
    std::int64_t ak = 0;
    for (const auto& [v, c] : eq.coeffs) {
        if (ak == 0 || std::abs(c) < std::abs(ak)) {
            xk = v;
            ak = c;
        }
    }
    std::int64_t m = std::abs(ak) + 1;
    Var sigma{"_s", ++sigma_counter};
    LinTerm hat;
    hat.constant = sym_mod(eq.constant, m);
    for (const auto& [v, c] : eq.coeffs) {
        std::int64_t r = sym_mod(c, m);
        if (r != 0) hat.coeffs[v] = r;
    }
    hat.coeffs[sigma] = -m;
    // hat's coefficient of xk is -sign(ak), a unit: substitute xk away
    std::int64_t ck = hat.coeffs.at(xk);
    LinTerm rest = hat;
    rest.coeffs.erase(xk);
    LinTerm rhs = scaled(rest, -ck);
    for (auto& row : p.eqs) row = subst_var(row, xk, rhs);
    for (auto& row : p.ges) row = subst_var(row, xk, rhs);
}

struct BoundSplit {
    // lower: l.coeff * x >= -(l without x); upper: u.coeff * x <= (u without x)
    std::vector<std::pair<std::int64_t, LinTerm>> lowers; // (b, L) meaning b*x >= L
    std::vector<std::pair<std::int64_t, LinTerm>> uppers; // (c, U) meaning c*x <= U
    std::vector<LinTerm> rest;
};

BoundSplit split_on(const Problem& p, const Var& x) {
    BoundSplit out;
    for (const auto& row : p.ges) {
        auto it = row.coeffs.find(x);
        if (it == row.coeffs.end()) {
            out.rest.push_back(row);
            continue;
        }
        std::int64_t c = it->second;
        LinTerm rem = row;
        rem.coeffs.erase(x);
        if (c > 0) {
            // c*x + rem >= 0  ->  c*x >= -rem
            out.lowers.emplace_back(c, scaled(rem, -1));
        } else {
            // c*x + rem >= 0  ->  (-c)*x <= rem
            out.uppers.emplace_back(-c, rem);
        }
    }
    return out;
}

bool solve(Problem p, Budget& budget, int& sigma_counter) {
    budget.spend();
    while (true) {
        if (!tighten(p)) return false;
        if (!p.eqs.empty()) {
            eliminate_equality(p, budget, sigma_counter);
            continue;
        }
        break;
    }
    if (p.ges.empty()) return true;

    // choose a variable: one-sided first, then exact shadows, then least work
    std::map<Var, std::pair<int, int>> counts; // lowers, uppers
    for (const auto& row : p.ges)
        for (const auto& [v, c] : row.coeffs) {
            auto& e = counts[v];
            (c > 0 ? e.first : e.second)++;
        }
    const Var* one_sided = nullptr;
    const Var* exact = nullptr;
    const Var* cheapest = nullptr;
    long best_work = -1, best_exact_work = -1;
    for (const auto& [v, e] : counts) {
        if (e.first == 0 || e.second == 0) {
            if (!one_sided) one_sided = &v;
            continue;
        }
        long work = static_cast<long>(e.first) * e.second;
        if (best_work < 0 || work < best_work) {
            best_work = work;
            cheapest = &v;
        }
        // shadows coincide when every pairing has a unit coefficient on one side
        bool all_unit = true;
        for (const auto& row : p.ges) {
            auto it = row.coeffs.find(v);
            if (it != row.coeffs.end() && std::abs(it->second) != 1) {
                all_unit = false;
                break;
            }
        }
        if (all_unit && (best_exact_work < 0 || work < best_exact_work)) {
            best_exact_work = work;
            exact = &v;
        }
    }
    if (one_sided) {
        // satisfiable by pushing x far out; its constraints bind nothing else
        Var x = *one_sided;
        Problem q;
        q.eqs = p.eqs;
        for (const auto& row : p.ges)
            if (!row.coeffs.count(x)) q.ges.push_back(row);
        return solve(std::move(q), budget, sigma_counter);
    }

    Var x = exact ? *exact : *cheapest;
    BoundSplit bs = split_on(p, x);

    Problem real;
    real.ges = bs.rest;
    Problem dark;
    dark.ges = bs.rest;
    for (const auto& [b, L] : bs.lowers)
        for (const auto& [c, U] : bs.uppers) {
            // real: b*U - c*L >= 0 ; dark: b*U - c*L >= (b-1)(c-1)
            LinTerm combo = plus(scaled(U, b), scaled(L, -c));
            real.ges.push_back(combo);
            LinTerm d = combo;
            d.constant = checked_add(d.constant, -checked_mul(b - 1, c - 1));
            dark.ges.push_back(std::move(d));
        }
    if (exact) return solve(std::move(real), budget, sigma_counter);
    if (!solve(real, budget, sigma_counter)) return false;
    if (solve(std::move(dark), budget, sigma_counter)) return true;

    // between the shadows: any solution has b*x within (b*m - b - m)/m of
    // some lower bound, so pin b*x = L + i and retry exactly
    std::int64_t m = 0;
    for (const auto& [c, U] : bs.uppers) {
        (void)U;
        m = std::max(m, c);
    }
    for (const auto& [b, L] : bs.lowers) {
        std::int64_t span = (checked_mul(b, m) - b - m) / m;
        for (std::int64_t i = 0; i <= span; ++i) {
            Problem q = p;
            LinTerm pin = scaled(L, -1); // b*x - L - i = 0
            pin.coeffs[x] = checked_add(pin.coeffs.count(x) ? pin.coeffs[x] : 0, b);
            pin.constant = checked_add(pin.constant, -i);
            q.eqs.push_back(std::move(pin));
            if (solve(std::move(q), budget, sigma_counter)) return true;
        }
    }
    return false;
}

bool sat_rec(Problem base, std::vector<LinTerm> nes, Budget& budget, int& sigma_counter) {
    while (!nes.empty()) {
        LinTerm ne = std::move(nes.back());
        nes.pop_back();
        if (ne.coeffs.empty()) {
            if (ne.constant == 0) return false; // 0 != 0
            continue;
        }
        // split: ne >= 1 or ne <= -1
        Problem left = base;
        LinTerm pos = ne;
        pos.constant = checked_add(pos.constant, -1);
        left.ges.push_back(std::move(pos));
        if (sat_rec(std::move(left), nes, budget, sigma_counter)) return true;
        LinTerm negv = scaled(ne, -1);
        negv.constant = checked_add(negv.constant, -1);
        base.ges.push_back(std::move(negv));
    }
    return solve(std::move(base), budget, sigma_counter);
}

} // namespace

bool sat(const std::vector<Constraint>& cs, std::uint64_t node_budget) {
    Problem base;
    std::vector<LinTerm> nes;
    for (const auto& c : cs) {
        switch (c.kind) {
        case Constraint::Kind::Ge0: base.ges.push_back(c.expr); break;
        case Constraint::Kind::Eq0: base.eqs.push_back(c.expr); break;
        case Constraint::Kind::Ne0: nes.push_back(c.expr); break;
        }
    }
    Budget budget{node_budget};
    int sigma_counter = 0;
    return sat_rec(std::move(base), std::move(nes), budget, sigma_counter);
}

} // namespace heapver::lia
