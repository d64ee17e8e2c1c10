use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freewords::measures::DEFAULT_BUDGET;

#[derive(Parser, Debug)]
#[command(
    name = "freewords",
    version,
    about = "Word measures on symmetric and finite groups, core graphs and algebraic extensions",
    long_about = "Word measures on symmetric and finite groups, core graphs and algebraic extensions.\n\n\
        Machine output (CSV, JSON or DOT) goes to --out when given, with a human summary on stdout. \
        Without --out the artifact goes to stdout and the summary to stderr.\n\n\
        Exit codes: 0 success, 2 usage or parse error, 3 hypothesis violation, 4 budget exceeded, \
        5 internal invariant failure."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// Worker threads for parallel enumeration (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Work-unit budget for each exact enumeration.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Artifact format (each command has its own default).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Dot,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Dot => "dot",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Words in a free group.
    #[command(subcommand)]
    Word(WordCmd),
    /// Stallings core graphs.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Algebraic extensions, primitivity rank and free-factor closure.
    #[command(subcommand)]
    Ext(ExtCmd),
    /// Word measures and expected fixed points.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Möbius derivation over algebraic extensions and the resulting expansion.
    #[command(subcommand)]
    Mobius(MobiusCmd),
    /// Permutations, their powers and roots.
    #[command(subcommand)]
    Perm(PermCmd),
}

#[derive(Args, Debug, Clone)]
pub struct WordArg {
    /// Word, e.g. "x^3 y^2", "[x,y]" or "xyXY" (upper case is inverse).
    #[arg(long)]
    pub word: String,
    /// Ambient rank (default: smallest rank containing the word).
    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SubgroupArg {
    /// Generator of the subgroup; repeat for several.
    #[arg(long = "gen", required = true)]
    pub gens: Vec<String>,
    /// Ambient rank (default: smallest rank containing the generators).
    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ExtArgs {
    /// Largest rank for which free factors are decided by Whitehead search.
    #[arg(long, default_value_t = 6)]
    pub rank_cap: usize,
    /// Largest core graph whose quotients are enumerated.
    #[arg(long, default_value_t = freewords::stallings::DEFAULT_QUOTIENT_VERTEX_CAP)]
    pub vertex_cap: usize,
}

#[derive(Args, Debug, Clone)]
pub struct RangeArg {
    /// Degrees: "a..b" (inclusive), a single N, or an ascending list "a,b,c".
    #[arg(long = "n")]
    pub n: String,
}

#[derive(Subcommand, Debug)]
pub enum WordCmd {
    /// Parse and freely reduce a word.
    ///
    /// Statement exercised: every element of a free group has a unique freely
    /// reduced spelling.
    Parse(WordArg),
    /// Cyclically reduce a word.
    ///
    /// Statement exercised: every word is c u c^-1 with u cyclically reduced,
    /// and u is unique up to cyclic rotation.
    Reduce(WordArg),
    /// Maximal root of a word.
    ///
    /// Statement exercised: every nontrivial w equals u^e for a unique u that
    /// is not a proper power, and e >= 1.
    Root(WordArg),
    /// Substitute words for the generators.
    ///
    /// Statement exercised: any choice of images of the generators extends to
    /// a unique homomorphism of the free group.
    Substitute {
        #[command(flatten)]
        word: WordArg,
        /// Image of the next generator; give one per generator.
        #[arg(long = "image", required = true)]
        images: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum GraphCmd {
    /// Fold a subgroup into its core graph and export it.
    ///
    /// Statement exercised: folding is confluent, so the core graph of a
    /// finitely generated subgroup is unique, and its rank is E - V + 1.
    #[command(alias = "export")]
    Fold(SubgroupArg),
    /// List the X-quotients of a core graph.
    ///
    /// Statement exercised: every algebraic extension of H is among the
    /// folded vertex-identification quotients of the core graph of H.
    Quotients {
        #[command(flatten)]
        subgroup: SubgroupArg,
        #[command(flatten)]
        ext: ExtArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum ExtCmd {
    /// List the algebraic extensions of a subgroup.
    ///
    /// Statement exercised: a finitely generated subgroup has finitely many
    /// algebraic extensions, and every extension H <= J factors uniquely as
    /// H <=alg A <=ff J.
    List {
        #[command(flatten)]
        subgroup: SubgroupArg,
        #[command(flatten)]
        ext: ExtArgs,
    },
    /// Primitivity rank of a word and the number of critical extensions.
    ///
    /// Statement exercised: pi(w), the smallest rank of a proper algebraic
    /// extension of <w>, is infinite exactly when w is primitive; C counts
    /// the proper algebraic extensions of rank pi(w).
    Pi {
        #[command(flatten)]
        word: WordArg,
        #[command(flatten)]
        ext: ExtArgs,
    },
    /// Relative primitivity rank of H under an embedding of F_k.
    ///
    /// Statement exercised: if H is algebraic in F_k and the images are free,
    /// pi_iota(H) is finite exactly when the images do not generate a free
    /// factor.
    PiIota {
        #[command(flatten)]
        subgroup: SubgroupArg,
        /// Image of the next generator of F_k; give one per generator.
        #[arg(long = "image", required = true)]
        images: Vec<String>,
        #[command(flatten)]
        ext: ExtArgs,
    },
    /// Free-factor closure of H in J.
    ///
    /// Statement exercised: for H <= J there is a unique A with
    /// H <=alg A <=ff J.
    FfClosure {
        #[command(flatten)]
        subgroup: SubgroupArg,
        /// Generator of J; repeat for several.
        #[arg(long = "over", required = true)]
        over: Vec<String>,
        #[command(flatten)]
        ext: ExtArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ModeArgs {
    /// Exact enumeration (the default).
    #[arg(long, conflicts_with = "mc")]
    pub exact: bool,
    /// Monte Carlo estimate; needs --samples and --seed.
    #[arg(long)]
    pub mc: bool,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Monte Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct GroupArg {
    /// Group: "S<k>" (k <= 6), "C<n>", "D<n>" or "cayley:<path>" (JSON table).
    #[arg(long)]
    pub group: String,
    /// Exact enumeration (the only mode for finite groups).
    #[arg(long)]
    pub exact: bool,
}

#[derive(Subcommand, Debug)]
pub enum MeasureCmd {
    /// Expected number of fixed points Tr_w(N) of a w-random permutation.
    ///
    /// Statement exercised: Tr_w(N) = 1 for primitive w at every N, Tr_w is
    /// invariant under automorphisms of the free group, and for example
    /// Tr_{x^3 y^2}(N) = 1 + 1/(N-1).
    Trw {
        #[command(flatten)]
        word: WordArg,
        #[command(flatten)]
        range: RangeArg,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Expected number of common fixed points of the images of a subgroup.
    ///
    /// Statement exercised: Phi_{H,F}(N) for a uniform homomorphism
    /// F -> S_N; for H = <x^d> it equals the number of divisors of d once
    /// N >= d.
    Phi {
        #[command(flatten)]
        subgroup: SubgroupArg,
        #[command(flatten)]
        range: RangeArg,
    },
    /// The w-measure on a finite group, by conjugacy class.
    ///
    /// Statement exercised: the w-measure is invariant under conjugation, so
    /// it is determined by its class probabilities.
    Table {
        #[command(flatten)]
        word: WordArg,
        #[command(flatten)]
        group: GroupArg,
    },
    /// Compare two word measures on a finite group.
    ///
    /// Statement exercised: [x,y] and x y x y^-1 induce the same measure on
    /// every finite group, while x and x^2 differ on S_3.
    Compare {
        /// First word.
        #[arg(long)]
        w1: String,
        /// Second word.
        #[arg(long)]
        w2: String,
        #[command(flatten)]
        group: GroupArg,
    },
    /// Images of a word under all epimorphisms onto a finite group.
    ///
    /// Statement exercised: the set of values of w under surjections
    /// F_r -> G is a union of Aut(G)-orbits and depends only on the
    /// Aut(F_r)-orbit of w.
    Epiim {
        #[command(flatten)]
        word: WordArg,
        #[command(flatten)]
        group: GroupArg,
    },
}

#[derive(Subcommand, Debug)]
pub enum MobiusCmd {
    /// Möbius derivation R_{H,J}(N) over the algebraic extensions of H.
    ///
    /// Statement exercised: Phi_{H,J}(N) is the sum of R_{H,M}(N) over the
    /// algebraic extensions H <=alg M <=alg J.
    Derive {
        #[command(flatten)]
        subgroup: SubgroupArg,
        #[command(flatten)]
        range: RangeArg,
        #[command(flatten)]
        ext: ExtArgs,
    },
    /// Phi_{H,F}(N) computed through the derivation, against direct enumeration.
    ///
    /// Statement exercised: Phi_{H,F}(N) is the sum of R_{H,J}(N) over all
    /// algebraic extensions J of H.
    ViaExpansion {
        #[command(flatten)]
        subgroup: SubgroupArg,
        #[command(flatten)]
        range: RangeArg,
        #[command(flatten)]
        ext: ExtArgs,
    },
    /// Fit Tr_w(N) = 1 + C N^(1-pi) + O(N^-pi) to exact values.
    ///
    /// Statement exercised: Tr_w(N) = 1 + C N^(1-pi(w)) + O(N^-pi(w)), where
    /// C is the number of proper algebraic extensions of <w> of rank pi(w).
    Fit {
        #[command(flatten)]
        word: WordArg,
        #[command(flatten)]
        range: RangeArg,
        #[command(flatten)]
        ext: ExtArgs,
    },
    /// Compare Tr_w(N) with Tr_{w(u_1..u_k)}(N).
    ///
    /// Statement exercised: if w is not in a proper free factor of F_k and
    /// u_1..u_k are free but do not generate a free factor, then
    /// Tr_w(N) < Tr_{w(u_1..u_k)}(N) for all large N.
    Thm14 {
        #[command(flatten)]
        word: WordArg,
        /// Image of the next generator; give one per generator.
        #[arg(long = "image", required = true)]
        images: Vec<String>,
        #[command(flatten)]
        range: RangeArg,
        #[command(flatten)]
        ext: ExtArgs,
    },
    /// Tabulate Tr_{u^d}(N) - Tr_u(N) against the divisor count of d.
    ///
    /// Statement exercised: for u = x and N >= d, Tr_{x^d}(N) - 1 equals the
    /// number of positive divisors of d minus one.
    PowerGap {
        #[command(flatten)]
        word: WordArg,
        /// The power d.
        #[arg(long)]
        d: u64,
        #[command(flatten)]
        range: RangeArg,
    },
}

#[derive(Args, Debug, Clone)]
pub struct PermArg {
    /// Permutation in cycle notation on 1..N, e.g. "(1 2)(3 4 5)".
    #[arg(long)]
    pub perm: String,
    /// Degree N.
    #[arg(long)]
    pub degree: usize,
}

#[derive(Subcommand, Debug)]
pub enum PermCmd {
    /// Cycle type of a permutation.
    ///
    /// Statement exercised: c_t(sigma), the number of t-cycles, determines
    /// the conjugacy class of sigma in S_N.
    CycleType(PermArg),
    /// Decide whether a permutation is a d-th power.
    ///
    /// Statement exercised: sigma is a d-th power iff for every t the number
    /// of t-cycles is divisible by m_t = prod over primes p | t of p^v_p(d).
    IsPower {
        #[command(flatten)]
        perm: PermArg,
        /// The power d.
        #[arg(long)]
        d: u64,
    },
    /// Construct a d-th root of a permutation.
    ///
    /// Statement exercised: when the divisibility criterion holds, grouping
    /// m_t cycles of length t into one cycle of length t m_t gives a root.
    Root {
        #[command(flatten)]
        perm: PermArg,
        /// The power d.
        #[arg(long)]
        d: u64,
    },
    /// Exact moments of c_t(sigma^b) for uniform sigma in S_N.
    ///
    /// Statement exercised: for b | t, E[c_t(sigma^b)] = 1/t when N >= bt and
    /// E[c_t(sigma^b)^2] = b/t + 1/t^2 when N >= 2bt.
    Moments {
        /// The power b.
        #[arg(long)]
        b: usize,
        /// The cycle length t.
        #[arg(long)]
        t: usize,
        #[command(flatten)]
        range: RangeArg,
    },
    /// Search for a homomorphism to S_N under which w is not a d-th power.
    ///
    /// Statement exercised: a word that is not a d-th power in the free group
    /// fails to be a d-th power in some finite quotient.
    Obstruction {
        #[command(flatten)]
        word: WordArg,
        /// The power d.
        #[arg(long)]
        d: u64,
        #[command(flatten)]
        range: RangeArg,
        /// Samples per degree too large for exhaustive search.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Seed for sampled degrees (required).
        #[arg(long)]
        seed: u64,
    },
}
