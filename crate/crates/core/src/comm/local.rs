use super::{CommError, CommResult, Communicator};
use crate::trace::{self, Trace};

/// Single-rank communicator. Collectives are identities and there is no
/// peer to talk to.
#[derive(Clone, Copy, Debug, Default)]
pub struct LocalComm;

impl Communicator for LocalComm {
    fn rank(&self) -> usize {
        0
    }

    fn size(&self) -> usize {
        1
    }

    fn send(&self, dest: usize, _data: &[f64]) -> CommResult<()> {
        self.check_peer(dest)?;
        Err(CommError::Contract("a single rank cannot send to itself".into()))
    }

    fn recv(&self, src: usize) -> CommResult<Vec<f64>> {
        self.check_peer(src)?;
        Err(CommError::Contract("a single rank cannot receive from itself".into()))
    }

    fn allreduce_sum(&self, local: &[f64]) -> CommResult<Vec<f64>> {
        Ok(local.to_vec())
    }

    fn broadcast(&self, root: usize, payload: &[f64]) -> CommResult<Vec<f64>> {
        self.check_peer(root)?;
        Ok(payload.to_vec())
    }

    fn message_trace(&self) -> CommResult<Trace> {
        Ok(trace::snapshot())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collectives_are_identities() {
        let c = LocalComm;
        assert_eq!(c.allreduce_sum(&[1.5, 2.0]).unwrap(), vec![1.5, 2.0]);
        assert_eq!(c.broadcast(0, &[7.0]).unwrap(), vec![7.0]);
        assert!(c.sendrecv(0, &[1.0]).is_err());
        assert!(c.broadcast(1, &[]).is_err());
    }
}
