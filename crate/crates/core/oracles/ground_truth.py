"""Symbolic / extended-precision ground truth for the catalog charts.

Run with `python3 ground_truth.py`; the printed values are frozen into the
Rust test-suite. Nothing here shares code with the Rust implementation.
"""
import sympy as sp
import mpmath as mp

mp.mp.dps = 40
u, v = sp.symbols("u v", real=True)


def fundamental(F, params):
    Fu = [sp.diff(c, params[0]) for c in F]
    Fv = [sp.diff(c, params[1]) for c in F]
    E = sp.simplify(sum(a * a for a in Fu))
    Fm = sp.simplify(sum(a * b for a, b in zip(Fu, Fv)))
    G = sp.simplify(sum(b * b for b in Fv))
    return Fu, Fv, E, Fm, G


def surface_in_r3(F):
    Fu, Fv, E, Fm, G = fundamental(F, (u, v))
    n = sp.Matrix(Fu).cross(sp.Matrix(Fv))
    nn = sp.sqrt(sp.simplify(n.dot(n)))
    N = n / nn
    L = sp.simplify(sp.Matrix([sp.diff(c, u, 2) for c in F]).dot(N))
    M = sp.simplify(sp.Matrix([sp.diff(c, u, v) for c in F]).dot(N))
    Nn = sp.simplify(sp.Matrix([sp.diff(c, v, 2) for c in F]).dot(N))
    return E, Fm, G, L, M, Nn, N


print("== pseudosphere ==")
F = [sp.sech(u) * sp.cos(v), sp.sech(u) * sp.sin(v), u - sp.tanh(u)]
E, Fm, G, L, M, Nn, N = surface_in_r3(F)
print("g =", sp.simplify(E.rewrite(sp.exp)), sp.simplify(Fm), sp.simplify(G.rewrite(sp.exp)))
ku = sp.simplify(L / E)
kv = sp.simplify(Nn / G)
print("k_u =", sp.simplify(ku.rewrite(sp.exp)), " k_v =", sp.simplify(kv.rewrite(sp.exp)))
print("k_u*k_v =", sp.simplify((ku * kv).rewrite(sp.exp)))
for uu in [0.5, 1.2, 2.0]:
    print("  u=%.2f k_u=%.15f k_v=%.15f  -1/sinh=%.15f sinh=%.15f" % (
        uu, float(ku.subs(u, uu)), float(kv.subs(u, uu)), -1 / float(sp.sinh(uu)), float(sp.sinh(uu))))
# Codazzi (c1) symbolically: principal frame X_u = d_u/sqrt(E), X_v = d_v/sqrt(G).
# Gamma_{ii}^j = <nabla_{X_i} X_i, X_j>; for orthogonal coordinates
# Gamma_{uu}^v = -(E_v)/(2 E sqrt(G)), Gamma_{vv}^u = -(G_u)/(2 G sqrt(E)).
sE, sG = sp.sqrt(E), sp.sqrt(G)
Guu_v = -sp.diff(E, v) / (2 * E * sG)
Gvv_u = -sp.diff(G, u) / (2 * G * sE)
# eta_u = k_u N, eta_v = k_v N ; nabla^perp_{X_j} eta_i = X_j(k_i) N
lhs1 = sp.diff(ku, v) / sG          # X_v(k_u)
rhs1 = Guu_v * (ku - kv)
lhs2 = sp.diff(kv, u) / sE          # X_u(k_v)
rhs2 = Gvv_u * (kv - ku)
print("c1 residual (v-derivative of k_u):", sp.simplify(lhs1 - rhs1))
for uu in [0.4, 0.8, 1.3, 2.1, 2.8]:
    print("  c1 at u=%.1f : %.3e" % (uu, float((lhs2 - rhs2).subs(u, uu))))
# connection formula Gamma_ii^j = lambda_i X_j(1/lambda_i), C = 1
lam_u = 1 / sp.sqrt(ku ** 2 + 1)
lam_v = 1 / sp.sqrt(kv ** 2 + 1)
r1 = sp.simplify((Guu_v - lam_u * sp.diff(1 / lam_u, v) / sG))
r2 = sp.simplify((Gvv_u - lam_v * sp.diff(1 / lam_v, u) / sE).rewrite(sp.exp))
print("nn residuals symbolic:", r1, r2)
for uu in [0.4, 0.8, 1.3, 2.1, 2.8]:
    print("  nn at u=%.1f : %.3e" % (uu, float(((Gvv_u - lam_v * sp.diff(1 / lam_v, u) / sE)).subs(u, uu))))
print("lambda_u =", sp.simplify(lam_u.rewrite(sp.exp)), "lambda_v =", sp.simplify(lam_v.rewrite(sp.exp)))
# Y = lambda X
Yu = sp.simplify((lam_u / sE).rewrite(sp.exp))
Yv = sp.simplify((lam_v / sG).rewrite(sp.exp))
print("Y_u coefficient:", Yu, " Y_v coefficient:", Yv)

print("== dini ==")
a, b = sp.symbols("a b", positive=True)
Fd = [a * sp.cos(u) * sp.sin(v), a * sp.sin(u) * sp.sin(v), a * (sp.cos(v) + sp.log(sp.tan(v / 2))) + b * u]
def dini_mp(A, B, U, V):
    A, B, U, V = map(mp.mpf, (A, B, U, V))
    return [A * mp.cos(U) * mp.sin(V), A * mp.sin(U) * mp.sin(V), A * (mp.cos(V) + mp.log(mp.tan(V / 2))) + B * U]
for (A, B, U, V) in [(1, 0.5, 0.7, 0.5), (1, 0.5, 3.9, 1.1), (1.3, 0.2, 5.5, 0.8)]:
    x = dini_mp(A, B, U, V)
    print("  dini(%s,%s) at (%s,%s) = [%s]" % (A, B, U, V, ", ".join(mp.nstr(c, 20) for c in x)))
E, Fm, G, L, M, Nn, N = surface_in_r3([c.subs({a: 1, b: sp.Rational(1, 2)}) for c in Fd])
K = sp.simplify((L * Nn - M ** 2) / (E * G - Fm ** 2))
for (U, V) in [(0.7, 0.5), (2.0, 0.9), (4.0, 1.1)]:
    print("  dini(1,1/2) K at (%s,%s) = %.15f" % (U, V, float(K.subs({u: U, v: V}))))
H = sp.simplify((E * Nn - 2 * Fm * M + G * L) / (2 * (E * G - Fm ** 2)))
for (U, V) in [(0.7, 0.5), (2.0, 0.9), (4.0, 1.1)]:
    h = float(H.subs({u: U, v: V}))
    k = float(K.subs({u: U, v: V}))
    k1, k2 = h + (h * h - k) ** 0.5, h - (h * h - k) ** 0.5
    print("  dini(1,0.5) principal curvatures at (%s,%s): %.15f %.15f  sff^2=%.15f" % (U, V, k1, k2, k1 * k1 + k2 * k2))

print("== veronese ==")
th, ph = sp.symbols("theta phi", real=True)
x, y, z = sp.sin(th) * sp.cos(ph), sp.sin(th) * sp.sin(ph), sp.cos(th)
Vv = [y * z, x * z, x * y, (x * x - y * y) / 2, (x * x + y * y - 2 * z * z) / (2 * sp.sqrt(3))]
Vf = sp.lambdify((th, ph), Vv, "mpmath")
Ju = [sp.lambdify((th, ph), sp.diff(c, th), "mpmath") for c in Vv]
Jv = [sp.lambdify((th, ph), sp.diff(c, ph), "mpmath") for c in Vv]
Huu = [sp.lambdify((th, ph), sp.diff(c, th, 2), "mpmath") for c in Vv]
Huv = [sp.lambdify((th, ph), sp.diff(c, th, ph), "mpmath") for c in Vv]
Hvv = [sp.lambdify((th, ph), sp.diff(c, ph, 2), "mpmath") for c in Vv]
Ev, Fv_, Gv = [sp.simplify(e) for e in fundamental(Vv, (th, ph))[2:]]
print("veronese g =", Ev, Fv_, Gv)


def veronese_commutator(T, P):
    T, P = mp.mpf(T), mp.mpf(P)
    fu = mp.matrix([f(T, P) for f in Ju])
    fv = mp.matrix([f(T, P) for f in Jv])
    tang = [fu, fv]
    g = mp.matrix([[sum(a * b for a, b in zip(p, q)) for q in tang] for p in tang])
    gi = g ** -1
    def normal(w):
        c = [sum(w[k] * t[k] for k in range(5)) for t in tang]
        out = mp.matrix(w)
        for i in range(2):
            for j in range(2):
                out -= gi[i, j] * c[j] * tang[i]
        return out
    # Gram-Schmidt of the projected standard basis
    frame = []
    for e in range(5):
        w = mp.matrix([1 if k == e else 0 for k in range(5)])
        w = normal(w)
        for f in frame:
            w -= sum(w[k] * f[k] for k in range(5)) * f
        nrm = mp.sqrt(sum(c * c for c in w))
        if nrm > mp.mpf("1e-8"):
            frame.append(w / nrm)
        if len(frame) == 3:
            break
    hs = [[mp.matrix([f(T, P) for f in Huu]), mp.matrix([f(T, P) for f in Huv])],
          [mp.matrix([f(T, P) for f in Huv]), mp.matrix([f(T, P) for f in Hvv])]]
    # g-orthonormal basis via Cholesky g = L L^T, S = L^-1 B L^-T
    Lc = mp.cholesky(g)
    Li = Lc ** -1
    S = []
    for xi in frame:
        B = mp.matrix([[sum(hs[i][j][k] * xi[k] for k in range(5)) for j in range(2)] for i in range(2)])
        S.append(Li * B * Li.T)
    best = mp.mpf(0)
    total = mp.mpf(0)
    for i in range(3):
        for j in range(i + 1, 3):
            Cm = S[i] * S[j] - S[j] * S[i]
            sq = sum(Cm[r, c] ** 2 for r in range(2) for c in range(2))
            best = max(best, mp.sqrt(sq))
            total += sq
    # the pair maximum depends on the normal frame; the root of the sum does not
    return best, mp.sqrt(total)


for (T, P) in [(0.6, 0.3), (0.8, 0.7), (1.0, 1.0), (1.2, 0.4), (0.9, 1.3)]:
    best, total = veronese_commutator(T, P)
    print("  veronese commutator at (%s,%s): pair max %s, frame-invariant %s" % (T, P, mp.nstr(best, 15), mp.nstr(total, 15)))
