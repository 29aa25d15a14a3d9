//! Elementary number theory: primality, factorization, divisor functions.

/// Deterministic primality test for the small integers used throughout.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// All primes `p <= n`, ascending.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve.iter().enumerate().filter_map(|(k, &p)| p.then_some(k as u64)).collect()
}

/// Prime factorization as `(p, e)` pairs with ascending `p`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Distinct primes dividing `n`.
pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of ordered factorizations `n = abcd`; equals `C(e+3, 3)` on `p^e`.
pub fn d4(n: u64) -> u64 {
    assert!(n >= 1, "d4 is defined for n >= 1");
    factorize(n).into_iter().map(|(_, e)| binomial(e as u64 + 3, 3)).product()
}

/// `d4(n)` for every `n <= m` by a multiplicative sieve; index 0 is unused.
pub fn d4_table(m: usize) -> Vec<u64> {
    let mut table = vec![1u64; m + 1];
    if m == 0 {
        return table;
    }
    table[0] = 0;
    for p in primes_up_to(m as u64) {
        let p = p as usize;
        let mut pk = p;
        let mut e = 1u64;
        while pk <= m {
            let factor = binomial(e + 3, 3);
            let prev = binomial(e + 2, 3).max(1);
            let mut j = pk;
            while j <= m {
                // j is divisible by p^e; replace the contribution of p^{e-1}.
                table[j] = table[j] / prev * factor;
                j += pk;
            }
            e += 1;
            match pk.checked_mul(p) {
                Some(next) => pk = next,
                None => break,
            }
        }
    }
    table
}

/// Integer square root (floor).
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}
