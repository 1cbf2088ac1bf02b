/// Cut points for one reward stream. Bucket `j` covers `[edges[j-1], edges[j])`,
/// with `-inf` and `+inf` closing the two ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketStream {
    pub offset: usize,
    pub edges: Vec<f64>,
}

impl BucketStream {
    pub fn num_buckets(&self) -> usize {
        self.edges.len() + 1
    }
}

/// Maps scalar rewards to game-point event indices, one interval partition per stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketTable {
    streams: Vec<BucketStream>,
}

impl BucketTable {
    /// Builds a table from per-stream cut points; offsets are assigned consecutively.
    ///
    /// # Panics
    /// If any stream's cut points are not strictly increasing and finite.
    pub fn new(stream_edges: Vec<Vec<f64>>) -> Self {
        let mut offset = 0;
        let streams = stream_edges
            .into_iter()
            .map(|edges| {
                assert!(
                    edges.iter().all(|e| e.is_finite()) && edges.windows(2).all(|w| w[0] < w[1]),
                    "bucket edges must be finite and strictly increasing: {edges:?}"
                );
                let s = BucketStream { offset, edges };
                offset += s.num_buckets();
                s
            })
            .collect();
        Self { streams }
    }

    /// Eleven game points over the scalar reward:
    /// `(-inf,-3) [-3,-2) [-2,-1) [-1,-0.5) [-0.5,0) [0,0.5) [0.5,1) [1,1.5) [1.5,2) [2,3) [3,inf)`.
    pub fn hopper() -> Self {
        Self::new(vec![vec![-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0]])
    }

    /// Forward stream points 0..=4: `(-inf,0) [0,0.5) [0.5,1) [1,2) [2,inf)`;
    /// control stream points 5..=7: `(-inf,-2) [-2,-1) [-1,inf)`.
    pub fn swimmer() -> Self {
        Self::new(vec![vec![0.0, 0.5, 1.0, 2.0], vec![-2.0, -1.0]])
    }

    pub fn streams(&self) -> &[BucketStream] {
        &self.streams
    }

    pub fn num_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn num_events(&self) -> usize {
        self.streams.iter().map(BucketStream::num_buckets).sum()
    }

    /// Global event index of the bucket on `stream` containing `r`.
    pub fn bucketize(&self, r: f64, stream: usize) -> usize {
        let s = &self.streams[stream];
        s.offset + s.edges.partition_point(|&e| e <= r)
    }
}
